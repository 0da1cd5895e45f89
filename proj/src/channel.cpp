#include "mimocap/channel.hpp"

#include <Eigen/SVD>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mimocap/errors.hpp"

namespace mimocap {

namespace {

int rank_from_singular_values(const Eigen::VectorXd& sv, double tol_rank) {
  if (sv.size() == 0) return 0;
  const double smax = sv(0);
  if (smax <= 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol_rank * smax) ++r;
  return r;
}

}  // namespace

ChannelModel validate_channel(const Eigen::MatrixXd& H, double A, double alpha,
                              double tol_rank) {
  if (H.rows() == 0 || H.cols() == 0)
    throw ZeroMatrixError("validate_channel: empty channel matrix");
  if (!(A > 0.0) || !(alpha > 0.0))
    throw NonPositivePowerError("validate_channel: A and alpha must be > 0");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(H);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv(0) <= 0.0)
    throw ZeroMatrixError("validate_channel: all singular values vanish");
  const int r = rank_from_singular_values(sv, tol_rank);
  if (r == 0) throw ZeroMatrixError("validate_channel: rank zero");

  ChannelModel m;
  m.H = H;
  m.A = A;
  m.alpha = alpha;
  m.status = (H.cols() > H.rows() && r == H.rows())
                 ? ChannelStatus::Canonical
                 : ChannelStatus::NeedsReduction;
  return m;
}

ReductionReport reduce_channel(const ChannelModel& model,
                               const std::optional<Eigen::MatrixXd>& noise_cov,
                               double tol_rank) {
  Eigen::MatrixXd H = model.H;
  ReductionReport rep;
  rep.whitened = false;

  if (noise_cov) {
    const Eigen::MatrixXd& K = *noise_cov;
    if (K.rows() != H.rows() || K.cols() != H.rows() ||
        !K.isApprox(K.transpose(), 1e-12))
      throw NotPositiveDefiniteError("reduce_channel: noise_cov must be symmetric n_R x n_R");
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
      throw NotPositiveDefiniteError("reduce_channel: Cholesky of noise_cov failed");
    // K = S^T S with S = L^T upper triangular, so S^{-T} = L^{-1}.
    H = llt.matrixL().solve(H);
    rep.whitened = true;
  } else if (model.canonical()) {
    rep.original_rank = model.nr();
    rep.transform = Eigen::MatrixXd::Identity(model.nr(), model.nr());
    rep.reduced = model;
    return rep;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeFullU);
  const Eigen::VectorXd sv = svd.singularValues();
  const int r = rank_from_singular_values(sv, tol_rank);
  if (r == 0) throw DegenerateChannelError("reduce_channel: channel has rank 0");

  rep.original_rank = r;
  rep.transform = svd.matrixU().transpose().topRows(r);
  rep.reduced.H = rep.transform * H;
  rep.reduced.A = model.A;
  rep.reduced.alpha = model.alpha;
  rep.reduced.status = (r == rep.reduced.nt()) ? ChannelStatus::SquareFullRank
                                               : ChannelStatus::Canonical;
  return rep;
}

double effective_alpha(const ChannelModel& model) {
  return std::min(model.alpha, 0.5 * model.nt());
}

ChannelModel channel_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("H") || !j["H"].is_array() || j["H"].empty())
    throw ZeroMatrixError("channel json: missing or empty \"H\"");
  const auto& rows = j["H"];
  const int nr = static_cast<int>(rows.size());
  const int nt = static_cast<int>(rows[0].size());
  Eigen::MatrixXd H(nr, nt);
  for (int i = 0; i < nr; ++i) {
    if (static_cast<int>(rows[i].size()) != nt)
      throw std::runtime_error("channel json: ragged \"H\"");
    for (int k = 0; k < nt; ++k) {
      double v = rows[i][k].get<double>();
      if (!std::isfinite(v)) throw std::runtime_error("channel json: non-finite entry in \"H\"");
      H(i, k) = v;
    }
  }
  const double A = j.at("A").get<double>();
  const double alpha = j.at("alpha").get<double>();
  if (!std::isfinite(A) || !std::isfinite(alpha))
    throw NonPositivePowerError("channel json: non-finite A or alpha");

  std::optional<Eigen::MatrixXd> K;
  if (j.contains("noise_cov") && !j["noise_cov"].is_null()) {
    const auto& kr = j["noise_cov"];
    Eigen::MatrixXd Km(kr.size(), kr.empty() ? 0 : kr[0].size());
    for (int i = 0; i < static_cast<int>(kr.size()); ++i)
      for (int k = 0; k < static_cast<int>(kr[i].size()); ++k)
        Km(i, k) = kr[i][k].get<double>();
    K = Km;
  }

  ChannelModel m = validate_channel(H, A, alpha);
  if (m.canonical() && !K) return m;
  ReductionReport rep = reduce_channel(m, K);
  if (rep.reduced.status == ChannelStatus::SquareFullRank)
    throw SquareFullRankError(
        "channel json: reduces to a square full-rank channel, which this "
        "toolkit does not handle");
  return rep.reduced;
}

ChannelModel load_channel_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open channel file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return channel_from_json_text(ss.str());
}

}  // namespace mimocap
