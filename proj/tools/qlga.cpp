#include <iostream>

#include <CLI11.hpp>

#include "qlga/qlga.hpp"

using namespace qlga;

namespace {

int cmd_run(const std::string& config, const std::string& output) {
  RunContext ctx(load_config(config));
  auto res = run_quantum(ctx);
  const std::string dir = output.empty() ? ctx.cfg().output : output;
  write_outputs(ctx, res, dir);
  std::cout << "wrote " << dir << " (" << res.qubits << " qubits, " << res.backend << ", " << res.mass.size() - 1
            << " steps)\n";
  return 0;
}

int cmd_oracle(const std::string& config, const std::string& output) {
  RunContext ctx(load_config(config));
  auto res = run_oracle(ctx);
  const std::string dir = output.empty() ? ctx.cfg().output + "/oracle" : output;
  write_outputs(ctx, res, dir);
  std::cout << "wrote " << dir << " (" << res.mass.size() - 1 << " steps)\n";
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, double tol) {
  auto r = compare_runs(a, b);
  json j{{"linf", r.linf}, {"per_step", r.per_step}, {"same_shape", r.same_shape}, {"match", r.match(tol)}};
  std::cout << j.dump(2) << '\n';
  return r.match(tol) ? 0 : 1;
}

int cmd_classes(const std::string& stencil, bool nontrivial, const std::string& format) {
  auto D = build_discretization(stencil);
  auto cls = enumerate_classes(D);
  if (nontrivial) cls = nontrivial_classes(cls);
  auto hex = [](std::uint32_t m) {
    std::ostringstream os;
    os << "0x" << std::hex << m;
    return os.str();
  };
  if (format == "csv") {
    std::cout << "mass,momentum,size,members\n";
    for (auto& c : cls) {
      std::cout << c.mass << ",\"";
      for (int k = 0; k < D.d; ++k) std::cout << (k ? " " : "") << c.momentum[k];
      std::cout << "\"," << c.size() << ",\"";
      for (std::size_t i = 0; i < c.members.size(); ++i) std::cout << (i ? " " : "") << hex(c.members[i]);
      std::cout << "\"\n";
    }
    return 0;
  }
  json out = json::array();
  for (auto& c : cls) {
    json mem = json::array();
    for (auto m : c.members) mem.push_back(hex(m));
    out.push_back({{"mass", c.mass},
                   {"momentum", std::vector<int>(c.momentum.begin(), c.momentum.begin() + D.d)},
                   {"members", mem}});
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_stencil_info(const std::string& stencil, int steps) {
  SpaceTimeStencil st(build_discretization(stencil), steps);
  std::vector<int> dims(st.disc().d, 2 * steps + 1);
  json j{{"stencil", stencil},
         {"steps", steps},
         {"sites", st.site_count()},
         {"velocity_qubits", st.n_velocity_qubits()},
         {"grid_qubits", grid_qubit_count(dims)},
         {"streaming_lines", st.streaming_lines().size()}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum lattice-gas automata toolkit"};
  app.require_subcommand(1);

  std::string config, output, a, b, stencil, format = "json";
  bool nontrivial = false;
  int steps = 1;
  double tol = 1e-9;

  auto* run = app.add_subcommand("run", "simulate a configuration on the statevector engine");
  run->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output, "output directory (overrides the config)");

  auto* oracle = app.add_subcommand("oracle", "classical reference run of a configuration");
  oracle->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  oracle->add_option("--output", output, "output directory");

  auto* compare = app.add_subcommand("compare", "L-infinity difference between two mass.csv runs");
  compare->add_option("--a", a, "first run directory")->required();
  compare->add_option("--b", b, "second run directory")->required();
  compare->add_option("--tol", tol, "match tolerance");

  auto* classes = app.add_subcommand("classes", "list collision equivalence classes");
  classes->add_option("--stencil", stencil, "d1q2, d2q4, d3q6 or d3q15")->required();
  classes->add_flag("--nontrivial", nontrivial, "only classes with at least two members and mass >= 2");
  classes->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* info = app.add_subcommand("stencil-info", "space-time stencil sizes");
  info->add_option("--stencil", stencil, "discretization")->required();
  info->add_option("--steps", steps, "steps per circuit")->required()->check(CLI::NonNegativeNumber);

  auto* validate = app.add_subcommand("validate-config", "check a configuration and forecast the register");
  validate->add_option("path", config, "run configuration (JSON)")->required();

  auto* report = app.add_subcommand("gate-report", "per-builder gate counts and scaling columns");
  report->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config, output);
    if (*oracle) return cmd_oracle(config, output);
    if (*compare) return cmd_compare(a, b, tol);
    if (*classes) return cmd_classes(stencil, nontrivial, format);
    if (*info) return cmd_stencil_info(stencil, steps);
    if (*validate) {
      std::cout << validate_config(config).dump(2) << '\n';
      return 0;
    }
    if (*report) {
      std::cout << gate_report(RunContext(load_config(config))).dump(2) << '\n';
      return 0;
    }
  } catch (const BudgetExceeded& e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const UnknownStencil& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
