#ifndef MIMOCAP_CHANNEL_HPP
#define MIMOCAP_CHANNEL_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace mimocap {

enum class ChannelStatus { Canonical, NeedsReduction, SquareFullRank };

/// An n_R x n_T intensity channel with per-antenna peak amplitude A and
/// average-to-peak ratio alpha. Canonical means n_T > n_R = rank(H).
struct ChannelModel {
  Eigen::MatrixXd H;
  double A = 1.0;
  double alpha = 1.0;
  ChannelStatus status = ChannelStatus::NeedsReduction;

  int nt() const { return static_cast<int>(H.cols()); }
  int nr() const { return static_cast<int>(H.rows()); }
  bool canonical() const { return status == ChannelStatus::Canonical; }
};

struct ReductionReport {
  int original_rank = 0;
  Eigen::MatrixXd transform;  // rows of U^T kept; orthonormal rows
  ChannelModel reduced;
  bool whitened = false;
};

/// Relative singular-value cutoff used for all rank decisions.
inline constexpr double kRankTol = 1e-10;

ChannelModel validate_channel(const Eigen::MatrixXd& H, double A, double alpha,
                              double tol_rank = kRankTol);

ReductionReport reduce_channel(
    const ChannelModel& model,
    const std::optional<Eigen::MatrixXd>& noise_cov = std::nullopt,
    double tol_rank = kRankTol);

/// min(alpha, n_T/2): beyond n_T/2 the average-power constraint is inactive.
double effective_alpha(const ChannelModel& model);

/// Parse {"H": [[...]], "A": x, "alpha": y, "noise_cov": [[...]]?} and
/// validate; reduces automatically when the raw matrix is not canonical.
ChannelModel load_channel_json(const std::string& path);
ChannelModel channel_from_json_text(const std::string& text);

}  // namespace mimocap

#endif
