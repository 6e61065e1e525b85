#include "rbldp/path_sim.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "rbldp/errors.hpp"
#include "rbldp/parallel.hpp"
#include "rbldp/rng.hpp"

namespace rbldp {

// ---------------------------------------------------------------------------
// Philox4x32-10 and normal streams

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::operator()(Counter ctr) const noexcept {
  Key key = key_;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : gen_({static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}),
      stream_(stream) {}

void NormalStream::refill() {
  const auto out = gen_({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                         static_cast<std::uint32_t>(stream_),
                         static_cast<std::uint32_t>(stream_ >> 32)});
  ++block_;
  words_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  words_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
  word_pos_ = 0;
}

double NormalStream::next_uniform() {
  if (word_pos_ == 2) refill();
  return static_cast<double>(words_[word_pos_++] >> 11) * 0x1.0p-53;
}

double NormalStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = 1.0 - next_uniform();  // (0, 1]
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

// ---------------------------------------------------------------------------
// Covariance assembly and factorization

Eigen::MatrixXd z_covariance(const Grid& grid, const ModelParams& params) {
  grid.validate();
  const int n = grid.n;
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double c = cov_zz(grid.time(i + 1), grid.time(j + 1), params);
      cov(i, j) = c;
      cov(j, i) = c;
    }
  return cov;
}

Eigen::MatrixXd joint_covariance(const Grid& grid, const ModelParams& params) {
  const int n = grid.n;
  Eigen::MatrixXd cov(2 * n, 2 * n);
  cov.topLeftCorner(n, n) = z_covariance(grid, params);
  for (int i = 0; i < n; ++i) {
    const double s = grid.time(i + 1);
    for (int j = 0; j < n; ++j) {
      const double t = grid.time(j + 1);
      const double zw = cov_zw(s, t, params);
      cov(i, n + j) = zw;
      cov(n + j, i) = zw;
      cov(n + i, n + j) = std::min(s, t);
    }
  }
  return cov;
}

namespace {

CholeskyFactor factorize(const Grid& grid, const ModelParams& params, bool joint,
                         const Eigen::MatrixXd& cov) {
  static constexpr std::array<double, 6> kJitter = {0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10};
  const Eigen::Index dim = cov.rows();
  for (double delta : kJitter) {
    Eigen::MatrixXd shifted = cov;
    shifted.diagonal().array() += delta;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      if (lower.allFinite()) return CholeskyFactor(grid, params, joint, lower, delta);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  throw FactorizationError("covariance factorization failed after jitter 1e-10 (dimension " +
                               std::to_string(dim) + ", min eigenvalue " +
                               std::to_string(eig.eigenvalues().minCoeff()) + ")",
                           eig.eigenvalues().minCoeff(), cov.diagonal().maxCoeff());
}

}  // namespace

CholeskyFactor::CholeskyFactor(Grid grid, ModelParams params, bool joint,
                               const Eigen::MatrixXd& lower, double jitter)
    : grid_(grid), params_(params), joint_(joint), dim_(static_cast<int>(lower.rows())),
      jitter_(jitter) {
  packed_.reserve(static_cast<std::size_t>(dim_) * (dim_ + 1) / 2);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j <= i; ++j) packed_.push_back(lower(i, j));
}

Eigen::MatrixXd CholeskyFactor::lower() const {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(dim_, dim_);
  std::size_t pos = 0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j <= i; ++j) l(i, j) = packed_[pos++];
  return l;
}

void CholeskyFactor::apply(std::span<const double> g, std::span<double> out) const {
  const int rows = static_cast<int>(out.size());
  const double* row = packed_.data();
  for (int i = 0; i < rows; ++i) {
    // four interleaved partial sums; fixed order keeps results reproducible
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const int len = i + 1;
    int j = 0;
    for (; j + 4 <= len; j += 4) {
      s0 += row[j] * g[j];
      s1 += row[j + 1] * g[j + 1];
      s2 += row[j + 2] * g[j + 2];
      s3 += row[j + 3] * g[j + 3];
    }
    for (; j < len; ++j) s0 += row[j] * g[j];
    out[i] = (s0 + s1) + (s2 + s3);
    row += len;
  }
}

CholeskyFactor build_joint_cholesky(const Grid& grid, const ModelParams& params) {
  params.validate();
  return factorize(grid, params, true, joint_covariance(grid, params));
}

CholeskyFactor build_z_cholesky(const Grid& grid, const ModelParams& params) {
  params.validate();
  return factorize(grid, params, false, z_covariance(grid, params));
}

// ---------------------------------------------------------------------------
// Sampling

PathBundle sample_path(const CholeskyFactor& factor, std::uint64_t seed, std::uint64_t replica) {
  if (!factor.joint()) throw DomainError("sample_path needs a joint (Z, W) factor");
  const Grid& grid = factor.grid();
  const int n = grid.n;
  const double rho = factor.params().rho;
  const double rho_bar = std::sqrt(1.0 - rho * rho);
  const double sqrt_dt = std::sqrt(grid.dt());

  NormalStream rng(seed, replica);
  std::vector<double> g(2 * n);
  for (auto& x : g) x = rng.next();
  std::vector<double> zw(2 * n);
  factor.apply(g, zw);

  PathBundle out;
  out.grid = grid;
  out.seed = seed;
  out.replica = replica;
  out.z.assign(n + 1, 0.0);
  out.w.assign(n + 1, 0.0);
  out.wperp.assign(n + 1, 0.0);
  out.b.assign(n + 1, 0.0);
  for (int k = 0; k < n; ++k) {
    out.z[k + 1] = zw[k];
    out.w[k + 1] = zw[n + k];
  }
  for (int k = 0; k < n; ++k) out.wperp[k + 1] = out.wperp[k] + sqrt_dt * rng.next();
  for (int k = 0; k <= n; ++k) out.b[k] = rho * out.w[k] + rho_bar * out.wperp[k];
  return out;
}

std::vector<double> sample_z_path(const CholeskyFactor& factor, std::uint64_t seed,
                                  std::uint64_t replica) {
  const int n = factor.grid().n;
  NormalStream rng(seed, replica);
  std::vector<double> g(n);
  for (auto& x : g) x = rng.next();
  std::vector<double> z(n + 1, 0.0);
  factor.apply(g, std::span<double>(z).subspan(1));
  return z;
}

std::vector<PathBundle> sample_bundle(const CholeskyFactor& factor, int n_paths,
                                      std::uint64_t seed, int threads) {
  if (n_paths < 1) throw DomainError("sample_bundle: n_paths must be positive");
  std::vector<PathBundle> out(n_paths);
  parallel_for(out.size(), threads,
               [&](std::size_t r) { out[r] = sample_path(factor, seed, r); });
  return out;
}

std::vector<double> rescale_z(std::span<const double> z, const ModelParams& params, double eps) {
  if (!(eps > 0.0)) throw DomainError("rescale: eps must be positive");
  const double m = std::pow(eps, params.beta() / 2.0);
  std::vector<double> out(z.begin(), z.end());
  for (auto& x : out) x *= m;
  return out;
}

std::vector<double> rescale_b(std::span<const double> b, const ModelParams& params, double eps) {
  return rescale_z(b, params, eps);
}

}  // namespace rbldp
