#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mimocap/bounds.hpp"
#include "mimocap/channel.hpp"
#include "mimocap/decomposition.hpp"
#include "mimocap/linprog.hpp"
#include "mimocap/maxvar.hpp"
#include "mimocap/mi.hpp"
#include "mimocap/report.hpp"

namespace fs = std::filesystem;
using namespace mimocap;

namespace {

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
  return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

void emit(const std::string& out_dir, const std::string& name,
          const std::string& content) {
  if (out_dir.empty()) {
    std::cout << content;
  } else {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / name).string(), content);
    std::cerr << "wrote " << (fs::path(out_dir) / name).string() << "\n";
  }
}

std::string alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", alpha);
  std::string s(buf);
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capacity bounds and optimal signaling structures for "
               "free-space optical MIMO intensity channels"};
  app.require_subcommand(1);

  std::string channel_path, out_dir;
  std::uint64_t seed = 12345;
  int threads = 0;
  app.add_option("--channel", channel_path, "channel JSON file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--threads", threads, "worker threads (0 = auto)");

  auto* cmd_decompose = app.add_subcommand(
      "decompose", "minimum-energy tiling of the zonotope");
  bool tikz = false;
  cmd_decompose->add_flag("--tikz-data", tikz,
                          "also emit per-cell vertex lists (n_R = 2)");

  auto* cmd_minenergy =
      app.add_subcommand("minenergy", "minimum-energy preimage of one point");
  std::string xbar_text;
  cmd_minenergy->add_option("--xbar", xbar_text, "target point, comma separated")
      ->required();

  auto* cmd_maxvar =
      app.add_subcommand("maxvar", "maximum covariance-trace input");

  auto* cmd_bounds = app.add_subcommand("bounds", "capacity-bound sweep");
  std::vector<double> alphas;
  double amin_db = -15.0, amax_db = 25.0;
  int steps = 81;
  cmd_bounds->add_option("--alpha", alphas, "average-to-peak ratio(s)")
      ->required();
  cmd_bounds->add_option("--amin-db", amin_db, "grid start, dB");
  cmd_bounds->add_option("--amax-db", amax_db, "grid end, dB");
  cmd_bounds->add_option("--steps", steps, "grid points");

  auto* cmd_kpoint =
      app.add_subcommand("kpoint", "numerical k-mass-point lower bound");
  int kpoints = 2;
  std::int64_t samples = 200000;
  int budget = 2000;
  std::vector<double> k_alphas;
  double k_amin = -15.0, k_amax = 25.0;
  int k_steps = 9;
  cmd_kpoint->add_option("--alpha", k_alphas, "average-to-peak ratio(s)")
      ->required();
  cmd_kpoint->add_option("--k", kpoints, "mass points (2, 3 or 4)");
  cmd_kpoint->add_option("--samples", samples, "MC samples per evaluation");
  cmd_kpoint->add_option("--budget", budget, "MI evaluations per grid point");
  cmd_kpoint->add_option("--amin-db", k_amin, "grid start, dB");
  cmd_kpoint->add_option("--amax-db", k_amax, "grid end, dB");
  cmd_kpoint->add_option("--steps", k_steps, "grid points");

  auto* cmd_nu = app.add_subcommand("nu-curve", "high-SNR power penalty curve");
  double nu_amin = 0.05, nu_amax = 0.0;
  int nu_steps = 50;
  cmd_nu->add_option("--alpha-min", nu_amin, "grid start");
  cmd_nu->add_option("--alpha-max", nu_amax,
                     "grid end (default: alpha_th - 0.01)");
  cmd_nu->add_option("--steps", nu_steps, "grid points");

  auto* cmd_table1 =
      app.add_subcommand("table1", "built-in max-variance comparison table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_table1->parsed()) {
      auto rows = run_table1(threads);
      std::cout << format_table1(rows);
      if (!out_dir.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows) {
          nlohmann::json row = {{"label", r.label},
                                {"alpha", r.alpha},
                                {"computed", r.computed},
                                {"paper", r.paper},
                                {"rel_err", r.rel_err},
                                {"tv_distance", r.tv_distance},
                                {"support_match", r.support_match}};
          j.push_back(row);
        }
        emit(out_dir, "table1.json", j.dump(2) + "\n");
      }
      return 0;
    }

    if (channel_path.empty()) {
      std::cerr << "error: --channel is required for this subcommand\n";
      return 1;
    }
    ChannelModel model = load_channel_json(channel_path);

    if (cmd_decompose->parsed()) {
      Decomposition dec = build_decomposition(model);
      emit(out_dir, "decomposition.json", decomposition_to_json(dec));
      if (tikz) emit(out_dir, "cells.dat", decomposition_tikz_data(dec));
    } else if (cmd_minenergy->parsed()) {
      Eigen::VectorXd xbar = parse_vector(xbar_text);
      Decomposition dec = build_decomposition(model);
      MinEnergyResult r = min_energy_input(dec, xbar);
      LpResult lp = lp_oracle_min_energy(model, xbar);
      nlohmann::json j;
      nlohmann::json u = nlohmann::json::array();
      for (int i : dec.cells[r.cell_index].U) u.push_back(i + 1);
      j["cell_U"] = u;
      j["x_min"] = std::vector<double>(r.x_min.data(),
                                       r.x_min.data() + r.x_min.size());
      j["beta"] =
          std::vector<double>(r.beta.data(), r.beta.data() + r.beta.size());
      j["energy"] = r.energy;
      j["lp_energy"] = lp.objective;
      emit(out_dir, "minenergy.json", j.dump(2) + "\n");
    } else if (cmd_maxvar->parsed()) {
      TraceSolution sol = max_trace(model, threads);
      nlohmann::json j;
      j["value"] = sol.value;
      j["units"] = "A^2";
      nlohmann::json ord = nlohmann::json::array();
      for (int i : sol.ordering) ord.push_back(i + 1);
      j["ordering"] = ord;
      nlohmann::json pmf = nlohmann::json::array();
      for (int i = 0; i < sol.input.probs.size(); ++i) {
        nlohmann::json pt;
        pt["x"] = std::vector<double>(
            sol.input.points[i].data(),
            sol.input.points[i].data() + sol.input.points[i].size());
        pt["p"] = sol.input.probs(i);
        pmf.push_back(pt);
      }
      j["pmf"] = pmf;
      emit(out_dir, "maxvar.json", j.dump(2) + "\n");
    } else if (cmd_bounds->parsed()) {
      SweepConfig cfg;
      cfg.channel_path = channel_path;
      cfg.alphas = alphas;
      cfg.amin_db = amin_db;
      cfg.amax_db = amax_db;
      cfg.steps = steps;
      cfg.out_dir = out_dir;
      cfg.seed = seed;
      cfg.threads = threads;
      SweepResult res = run_sweep(model, cfg);
      if (out_dir.empty()) std::cout << bound_reports_csv(res.reports);
      for (const auto& f : res.failures)
        std::cerr << "cell failed: alpha=" << f.alpha << " A_dB=" << f.A_dB
                  << ": " << f.what << "\n";
    } else if (cmd_kpoint->parsed()) {
      for (double alpha : k_alphas) {
        std::ostringstream csv;
        std::ostringstream dat;
        csv << "A_dB,kpoint_lb,std_error\n";
        for (int i = 0; i < k_steps; ++i) {
          double adb = k_amin + (k_steps == 1 ? 0.0
                                              : (k_amax - k_amin) * i /
                                                    (k_steps - 1));
          double A = std::pow(10.0, adb / 10.0);
          ChannelModel m = model;
          m.A = A;
          m.alpha = alpha;
          Decomposition dec = build_decomposition(m);
          KPointResult r = k_point_lower_bound(dec, effective_alpha(m), kpoints,
                                               budget, seed, samples,
                                               10 * samples);
          csv << fmt9(adb) << ',' << fmt9(r.mi.value) << ','
              << fmt9(r.mi.std_error) << '\n';
          dat << fmt9(adb) << ' ' << fmt9(r.mi.value) << '\n';
        }
        std::string tag =
            "k" + std::to_string(kpoints) + "_alpha" + alpha_tag(alpha);
        emit(out_dir, "kpoint_" + tag + ".csv", csv.str());
        if (!out_dir.empty()) emit(out_dir, "kpoint_" + tag + ".dat", dat.str());
      }
    } else if (cmd_nu->parsed()) {
      Decomposition dec = build_decomposition(model);
      double hi = nu_amax > 0.0 ? nu_amax : dec.alpha_th - 0.01;
      std::vector<double> grid;
      for (int i = 0; i < nu_steps; ++i)
        grid.push_back(nu_amin + (nu_steps == 1
                                      ? 0.0
                                      : (hi - nu_amin) * i / (nu_steps - 1)));
      auto curve = run_nu_curve(model, grid);
      std::ostringstream os;
      for (auto& [a, v] : curve) os << fmt9(a) << ' ' << fmt9(v) << '\n';
      emit(out_dir, "nu.dat", os.str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
