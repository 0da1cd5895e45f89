#ifndef MIMOCAP_REPORT_HPP
#define MIMOCAP_REPORT_HPP

#include <string>
#include <vector>

#include "mimocap/bounds.hpp"
#include "mimocap/channel.hpp"
#include "mimocap/decomposition.hpp"

namespace mimocap {

struct SweepConfig {
  std::string channel_path;
  std::vector<double> alphas;
  double amin_db = -15.0;
  double amax_db = 25.0;
  int steps = 81;
  std::string out_dir;  // empty: no files, reports only
  std::uint64_t seed = 12345;
  int threads = 0;  // 0: hardware concurrency
  bool with_mu_delta = true;
  bool with_trace = true;
};

struct SweepFailure {
  double alpha = 0.0;
  double A_dB = 0.0;
  std::string what;
};

struct SweepResult {
  std::vector<BoundReport> reports;  // alpha-major, grid order
  std::vector<SweepFailure> failures;
};

void validate_sweep_config(const SweepConfig& config);

SweepResult run_sweep(const ChannelModel& model, const SweepConfig& config);

struct Table1Row {
  std::string label;
  double alpha = 0.0;
  double computed = 0.0;
  double paper = 0.0;
  double rel_err = 0.0;
  // pmf over chain-prefix sizes (input L1 cost in units of A)
  std::vector<std::pair<int, double>> computed_pmf;
  std::vector<std::pair<int, double>> paper_pmf;
  double tv_distance = 0.0;
  bool support_match = false;
};

std::vector<Table1Row> run_table1(int threads = 0);
std::string format_table1(const std::vector<Table1Row>& rows);

/// (alpha, nu) pairs; the grid must lie inside (0, alpha_th).
std::vector<std::pair<double, double>> run_nu_curve(
    const ChannelModel& model, const std::vector<double>& alpha_grid);

/// 9-significant-digit formatting used for every emitted number.
std::string fmt9(double x);

std::string decomposition_to_json(const Decomposition& dec);
/// Two-column vertex walks of each cell (n_R = 2 only), blocks separated by
/// blank lines, ready for replotting the tiling figures.
std::string decomposition_tikz_data(const Decomposition& dec);

std::string bound_reports_csv(const std::vector<BoundReport>& reports);
void write_sweep_outputs(const SweepConfig& config, const ChannelModel& model,
                         const SweepResult& result);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mimocap

#endif
