#include "mimocap/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mimocap/errors.hpp"

namespace mimocap {

std::string fmt9(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

void validate_sweep_config(const SweepConfig& config) {
  if (config.steps < 2)
    throw std::invalid_argument("sweep config: steps must be >= 2");
  if (!(config.amax_db > config.amin_db))
    throw std::invalid_argument("sweep config: amplitude grid must be increasing");
  if (config.alphas.empty())
    throw std::invalid_argument("sweep config: need at least one alpha");
  for (double a : config.alphas)
    if (!(a > 0.0))
      throw std::invalid_argument("sweep config: alpha values must be > 0");
}

SweepResult run_sweep(const ChannelModel& model, const SweepConfig& config) {
  validate_sweep_config(config);
  SweepResult result;

  std::vector<double> grid(config.steps);
  for (int i = 0; i < config.steps; ++i)
    grid[i] = config.amin_db +
              (config.amax_db - config.amin_db) * i / (config.steps - 1);

  int nthreads = config.threads > 0
                     ? config.threads
                     : std::max(1u, std::thread::hardware_concurrency());

  for (double alpha : config.alphas) {
    AlphaCache cache = make_alpha_cache(model, alpha, config.threads);
    std::vector<BoundReport> rows(grid.size());
    std::vector<std::string> errs(grid.size());

    auto worker = [&](size_t lo, size_t hi) {
      for (size_t i = lo; i < hi; ++i) {
        double A = std::pow(10.0, grid[i] / 10.0);
        try {
          BoundReport r = compute_bound_report(model, cache, A);
          if (!config.with_mu_delta)
            r.ub_mu_delta = std::numeric_limits<double>::quiet_NaN();
          if (!config.with_trace)
            r.ub_trace = std::numeric_limits<double>::quiet_NaN();
          rows[i] = r;
        } catch (const std::exception& e) {
          BoundReport r;
          r.A_linear = A;
          r.A_dB = grid[i];
          r.alpha_used = cache.alpha_used;
          r.lb_uniform = r.lb_exp = r.ub_peak = r.ub_mu = r.ub_mu_delta =
              r.ub_trace = r.nu = std::numeric_limits<double>::quiet_NaN();
          rows[i] = r;
          errs[i] = e.what();
        }
      }
    };

    if (nthreads <= 1 || grid.size() < 4) {
      worker(0, grid.size());
    } else {
      std::vector<std::future<void>> futs;
      size_t chunk = (grid.size() + nthreads - 1) / nthreads;
      for (int t = 0; t < nthreads; ++t) {
        size_t lo = t * chunk;
        size_t hi = std::min(grid.size(), lo + chunk);
        if (lo >= hi) break;
        futs.push_back(std::async(std::launch::async, worker, lo, hi));
      }
      for (auto& f : futs) f.get();
    }

    for (size_t i = 0; i < grid.size(); ++i) {
      result.reports.push_back(rows[i]);
      if (!errs[i].empty())
        result.failures.push_back({alpha, grid[i], errs[i]});
    }
  }

  if (!config.out_dir.empty()) write_sweep_outputs(config, model, result);
  return result;
}

std::string bound_reports_csv(const std::vector<BoundReport>& reports) {
  std::ostringstream os;
  os << "A_dB,lb_uniform,lb_exp,ub_peak,ub_mu,ub_mu_delta,ub_trace,nu\n";
  for (const auto& r : reports) {
    os << fmt9(r.A_dB) << ',' << fmt9(r.lb_uniform) << ',' << fmt9(r.lb_exp)
       << ',' << fmt9(r.ub_peak) << ',' << fmt9(r.ub_mu) << ','
       << fmt9(r.ub_mu_delta) << ',' << fmt9(r.ub_trace) << ',' << fmt9(r.nu)
       << '\n';
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

namespace {

std::string alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", alpha);
  std::string s(buf);
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

std::string dat_column(const std::vector<BoundReport>& rows,
                       double BoundReport::* field) {
  std::ostringstream os;
  for (const auto& r : rows) {
    double v = r.*field;
    if (std::isnan(v)) continue;
    os << fmt9(r.A_dB) << ' ' << fmt9(v) << '\n';
  }
  return os.str();
}

}  // namespace

void write_sweep_outputs(const SweepConfig& config, const ChannelModel& model,
                         const SweepResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const size_t per_alpha = result.reports.size() / config.alphas.size();

  nlohmann::json manifest;
  manifest["db_convention"] = "A_dB = 10*log10(A)";
  manifest["thm_upper_bounds_evaluation"] =
      "inf-sup relaxation (valid upper bound; may exceed the sup-inf value at mid SNR)";
  manifest["seed"] = config.seed;
  manifest["alphas"] = config.alphas;
  manifest["grid"] = {{"amin_db", config.amin_db},
                      {"amax_db", config.amax_db},
                      {"steps", config.steps}};
  manifest["channel"] = {{"n_r", model.nr()}, {"n_t", model.nt()}};
  manifest["tolerances"] = {{"rank", 1e-10},
                            {"det", 1e-10},
                            {"tie", 1e-9},
                            {"box", 1e-9},
                            {"golden_section", 1e-8},
                            {"mu_residual", 1e-12},
                            {"kl_constraint", 1e-12},
                            {"qp_kkt", 1e-10}};
  manifest["solver"] = {
      {"scalar_optimizer", "golden section"},
      {"chain_qp", "projected gradient + active-set polish"},
      {"ordering_search", "exhaustive for n_T <= 8"},
  };
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : result.failures)
    fails.push_back({{"alpha", f.alpha}, {"A_dB", f.A_dB}, {"error", f.what}});
  manifest["failures"] = fails;
  write_text_file((fs::path(config.out_dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");

  static const std::vector<std::pair<const char*, double BoundReport::*>>
      kBoundFields = {{"lb_uniform", &BoundReport::lb_uniform},
                      {"lb_exp", &BoundReport::lb_exp},
                      {"ub_peak", &BoundReport::ub_peak},
                      {"ub_mu", &BoundReport::ub_mu},
                      {"ub_mu_delta", &BoundReport::ub_mu_delta},
                      {"ub_trace", &BoundReport::ub_trace}};

  for (size_t ai = 0; ai < config.alphas.size(); ++ai) {
    std::vector<BoundReport> rows(
        result.reports.begin() + ai * per_alpha,
        result.reports.begin() + (ai + 1) * per_alpha);
    std::string tag = alpha_tag(config.alphas[ai]);
    write_text_file(
        (fs::path(config.out_dir) / ("bounds_alpha" + tag + ".csv")).string(),
        bound_reports_csv(rows));
    for (const auto& [name, field] : kBoundFields) {
      std::string data = dat_column(rows, field);
      write_text_file((fs::path(config.out_dir) /
                       (std::string(name) + "_alpha" + tag + ".dat"))
                          .string(),
                      data);
    }
  }
}

namespace {

struct Table1Config {
  const char* label;
  Eigen::MatrixXd H;
  double alpha;
  double paper_value;
  std::vector<std::pair<int, double>> paper_pmf;
};

std::vector<Table1Config> table1_configs() {
  Eigen::MatrixXd h24(2, 4);
  h24 << 1.3, 0.6, 1.0, 0.1, 2.1, 4.5, 0.7, 0.5;
  Eigen::MatrixXd h34(3, 4);
  h34 << 0.9, 3.2, 1.0, 2.1, 0.5, 3.5, 1.7, 2.5, 0.7, 1.1, 1.1, 1.3;
  return {
      {"2x4 alpha=1.5", h24, 1.5, 16.3687, {{0, 0.625}, {4, 0.375}}},
      {"2x4 alpha=0.9", h24, 0.9, 12.957, {{0, 0.7}, {3, 0.3}}},
      {"2x4 alpha=0.6", h24, 0.6, 9.9575, {{0, 0.7438}, {2, 0.1687}, {3, 0.0875}}},
      {"2x4 alpha=0.3", h24, 0.3, 6.0142, {{0, 0.85}, {2, 0.15}}},
      {"3x4 alpha=0.9", h34, 0.9, 23.8405, {{0, 0.7755}, {4, 0.2245}}},
      {"3x4 alpha=0.75", h34, 0.75, 20.8950, {{0, 0.7772}, {3, 0.1413}, {4, 0.0815}}},
      {"3x4 alpha=0.6", h34, 0.6, 17.7968, {{0, 0.8}, {3, 0.2}}},
  };
}

}  // namespace

std::vector<Table1Row> run_table1(int threads) {
  std::vector<Table1Row> rows;
  for (const auto& cfg : table1_configs()) {
    ChannelModel m = validate_channel(cfg.H, 1.0, cfg.alpha);
    TraceSolution sol = max_trace(m, threads);

    Table1Row row;
    row.label = cfg.label;
    row.alpha = cfg.alpha;
    row.computed = sol.value;
    row.paper = cfg.paper_value;
    row.rel_err = std::abs(sol.value - cfg.paper_value) / cfg.paper_value;
    std::map<int, double> pmf;
    for (int i = 0; i < sol.input.probs.size(); ++i) {
      int sz = static_cast<int>(std::lround(sol.input.points[i].lpNorm<1>()));
      pmf[sz] += sol.input.probs(i);
    }
    for (auto& [sz, p] : pmf) row.computed_pmf.emplace_back(sz, p);
    row.paper_pmf = cfg.paper_pmf;

    std::map<int, double> paper(cfg.paper_pmf.begin(), cfg.paper_pmf.end());
    double tv = 0.0;
    bool match = pmf.size() == paper.size();
    for (auto& [sz, p] : pmf) {
      auto it = paper.find(sz);
      if (it == paper.end()) {
        match = false;
        tv += p;
      } else {
        tv += std::abs(p - it->second);
      }
    }
    for (auto& [sz, p] : paper)
      if (!pmf.count(sz)) tv += p;
    row.tv_distance = 0.5 * tv;
    row.support_match = match;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_table1(const std::vector<Table1Row>& rows) {
  std::ostringstream os;
  os << "config            computed      paper         rel_err     tv_dist   support\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-16s  %-12.6f  %-12.6f  %-10.2e  %-8.4f  %s\n",
                  r.label.c_str(), r.computed, r.paper, r.rel_err,
                  r.tv_distance, r.support_match ? "match" : "MISMATCH");
    os << buf;
  }
  return os.str();
}

std::vector<std::pair<double, double>> run_nu_curve(
    const ChannelModel& model, const std::vector<double>& alpha_grid) {
  Decomposition dec = build_decomposition(model);
  std::vector<std::pair<double, double>> out;
  for (double a : alpha_grid) {
    if (!(a > 0.0) || a >= dec.alpha_th)
      throw OutOfRangeError("run_nu_curve: alpha grid must lie in (0, alpha_th)");
    out.emplace_back(a, nu(dec, a));
  }
  return out;
}

std::string decomposition_to_json(const Decomposition& dec) {
  nlohmann::json j;
  j["A"] = dec.A;
  j["V_H"] = dec.V_H;
  j["alpha_th"] = dec.alpha_th;
  j["tie_break_path"] = dec.tie_path;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : dec.cells) {
    nlohmann::json jc;
    nlohmann::json u = nlohmann::json::array();
    for (int i : c.U) u.push_back(i + 1);  // 1-based for the interface
    jc["U"] = u;
    jc["det_abs"] = c.det_abs;
    jc["q"] = c.q;
    jc["s"] = c.s;
    nlohmann::json g = nlohmann::json::object();
    for (size_t t = 0; t < c.comp.size(); ++t)
      g[std::to_string(c.comp[t] + 1)] = c.g[t];
    jc["g"] = g;
    jc["v"] = std::vector<double>(c.v.data(), c.v.data() + c.v.size());
    jc["sigma"] =
        std::vector<double>(c.sigma.data(), c.sigma.data() + c.sigma.size());
    cells.push_back(jc);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

std::string decomposition_tikz_data(const Decomposition& dec) {
  if (dec.nr() != 2)
    throw std::invalid_argument("tikz data output requires n_R = 2");
  std::ostringstream os;
  for (const auto& c : dec.cells) {
    Eigen::VectorXd e1 = dec.A * c.H_U.col(0);
    Eigen::VectorXd e2 = dec.A * c.H_U.col(1);
    Eigen::VectorXd corners[5] = {c.v, c.v + e1, c.v + e1 + e2, c.v + e2, c.v};
    os << "# U = {" << c.U[0] + 1 << "," << c.U[1] + 1 << "}\n";
    for (const auto& p : corners)
      os << fmt9(p(0)) << ' ' << fmt9(p(1)) << '\n';
    os << '\n';
  }
  return os.str();
}

}  // namespace mimocap
