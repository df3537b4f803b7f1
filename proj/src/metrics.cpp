#include "pfode/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pfode/errors.hpp"
#include "pfode/kernels.hpp"
#include "pfode/rng.hpp"

namespace pfode {

namespace {
constexpr std::uint64_t kDirectionStream = 0x534C494345ULL;
constexpr std::uint64_t kPermutationStream = 0x5045524DULL;
}  // namespace

void SampleSet::validate() const {
  if (samples.rows() < 2) throw InvalidArgument("sample set needs at least 2 rows");
  if (!samples.allFinite()) throw NonFiniteState("sample set has non-finite entries");
  if (!(weight > 0.0)) throw InvalidArgument("sample set weight must be > 0");
}

double wasserstein2_1d(Eigen::VectorXd a, Eigen::VectorXd b) {
  if (a.size() == 0 || b.size() == 0) throw InvalidArgument("wasserstein2_1d: empty input");
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  const Eigen::Index n = a.size();
  const Eigen::Index m = b.size();
  if (n == m) return std::sqrt((a - b).squaredNorm() / static_cast<double>(n));
  // Walk the merged breakpoints i/n and j/m of the two quantile functions.
  double acc = 0.0;
  double u = 0.0;
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  while (i < n && j < m) {
    const double next_a = static_cast<double>(i + 1) / static_cast<double>(n);
    const double next_b = static_cast<double>(j + 1) / static_cast<double>(m);
    const double next = std::min(next_a, next_b);
    const double d = a[i] - b[j];
    acc += (next - u) * d * d;
    u = next;
    // Cross-multiplied comparisons keep exact ties exact.
    const bool step_a = (i + 1) * m <= (j + 1) * n;
    const bool step_b = (j + 1) * n <= (i + 1) * m;
    if (step_a) ++i;
    if (step_b) ++j;
  }
  return std::sqrt(acc);
}

Eigen::MatrixXd random_directions(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("random_directions: dimension must be positive");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  const std::uint64_t stream = derive_seed(seed, kDirectionStream);
  for (std::size_t p = 0; p < count; ++p) {
    Rng rng = substream(stream, p);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    do {
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
    } while (v.norm() == 0.0);
    out.row(static_cast<Eigen::Index>(p)) = (v / v.norm()).transpose();
  }
  return out;
}

double sliced_wasserstein(const SampleSet& a, const SampleSet& b, std::size_t n_projections,
                          std::uint64_t seed, Exec exec) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("sliced_wasserstein: dimensions " + std::to_string(a.dim()) + " and " +
                            std::to_string(b.dim()));
  }
  if (n_projections == 0) throw InvalidArgument("sliced_wasserstein: need at least one projection");
  if (a.size() == 0 || b.size() == 0) throw InvalidArgument("sliced_wasserstein: empty sample set");
  const Eigen::MatrixXd dirs = random_directions(n_projections, a.dim(), seed);
  std::vector<double> per(n_projections);
  kernels::for_each_index(n_projections, exec, [&](std::size_t p) {
    const Eigen::VectorXd theta = dirs.row(static_cast<Eigen::Index>(p)).transpose();
    per[p] = wasserstein2_1d(a.samples * theta, b.samples * theta);
  });
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc / static_cast<double>(n_projections);
}

FpcaResult fpca_scores(const SampleSet& pooled, std::size_t r) {
  pooled.validate();
  const Eigen::Index n = pooled.samples.rows();
  const Eigen::Index p = pooled.samples.cols();
  if (r == 0 || static_cast<Eigen::Index>(r) > std::min(n - 1, p)) {
    throw InvalidArgument("fpca_scores: r = " + std::to_string(r) + " must be in [1, min(n - 1, P)]");
  }
  FpcaResult out;
  out.mean = pooled.samples.colwise().mean();
  const Eigen::MatrixXd centered = pooled.samples.rowwise() - out.mean;
  const double sw = std::sqrt(pooled.weight);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(sw * centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double tol = 1e-10 * std::max(s[0], 1e-300);
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  const auto rr = static_cast<Eigen::Index>(r);
  if (rr > rank) {
    throw RankDeficient("fpca_scores: requested " + std::to_string(r) +
                        " components but numerical rank is " + std::to_string(rank));
  }
  Eigen::MatrixXd v = svd.matrixV().leftCols(rr);
  // Sign convention: the largest-magnitude entry of each component is positive.
  for (Eigen::Index k = 0; k < rr; ++k) {
    Eigen::Index at = 0;
    v.col(k).cwiseAbs().maxCoeff(&at);
    if (v(at, k) < 0.0) v.col(k) = -v.col(k);
  }
  out.components = v / sw;
  out.scores = sw * (centered * v);
  out.explained = s.head(rr).array().square() / static_cast<double>(n - 1);
  return out;
}

double median_pairwise_distance(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw InvalidArgument("median_pairwise_distance: need at least 2 rows");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((x.row(i) - x.row(j)).norm());
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return med;
}

namespace {

// Unbiased MMD^2 from a pooled Gram matrix, the X-membership indicator and
// the Gram column sums. Diagonal entries of the squared-exponential Gram are 1.
double unbiased_from_gram(const Eigen::MatrixXd& g, const Eigen::VectorXd& in_x,
                          const Eigen::VectorXd& col_sums, double total, double n, double m) {
  const double sxx = in_x.dot(g * in_x);
  const double sx_all = col_sums.dot(in_x);
  const double syy = total - 2.0 * sx_all + sxx;
  const double sxy = sx_all - sxx;
  return (sxx - n) / (n * (n - 1.0)) + (syy - m) / (m * (m - 1.0)) - 2.0 * sxy / (n * m);
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw DimensionMismatch("mmd2: dimension mismatch");
  Eigen::MatrixXd z(a.rows() + b.rows(), a.cols());
  z << a, b;
  return z;
}

}  // namespace

double mmd2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::optional<double> bandwidth,
            Exec exec) {
  if (a.rows() < 2 || b.rows() < 2) throw InvalidArgument("mmd2: each set needs at least 2 rows");
  const Eigen::MatrixXd z = stack(a, b);
  const double h = bandwidth ? *bandwidth : median_pairwise_distance(z);
  if (!(h > 0.0)) throw InvalidArgument("mmd2: bandwidth must be positive");
  Eigen::MatrixXd g;
  kernels::sq_exp_gram(z, h, g, exec);
  Eigen::VectorXd in_x = Eigen::VectorXd::Zero(z.rows());
  in_x.head(a.rows()).setOnes();
  const Eigen::VectorXd col_sums = g.colwise().sum().transpose();
  return unbiased_from_gram(g, in_x, col_sums, col_sums.sum(), static_cast<double>(a.rows()),
                            static_cast<double>(b.rows()));
}

double mmd2_biased(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                   std::optional<double> bandwidth, Exec exec) {
  if (a.rows() < 1 || b.rows() < 1) throw InvalidArgument("mmd2_biased: empty set");
  const Eigen::MatrixXd z = stack(a, b);
  const double h = bandwidth ? *bandwidth : median_pairwise_distance(z);
  if (!(h > 0.0)) throw InvalidArgument("mmd2_biased: bandwidth must be positive");
  Eigen::MatrixXd g;
  kernels::sq_exp_gram(z, h, g, exec);
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.rows();
  const double kxx = g.topLeftCorner(n, n).sum() / static_cast<double>(n * n);
  const double kyy = g.bottomRightCorner(m, m).sum() / static_cast<double>(m * m);
  const double kxy = g.topRightCorner(n, m).sum() / static_cast<double>(n * m);
  return kxx + kyy - 2.0 * kxy;
}

void TestConfig::validate() const {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("test config: level must be in (0, 1)");
  if (permutations < 100) throw InvalidArgument("test config: permutations must be >= 100");
  if (trials < 1) throw InvalidArgument("test config: trials must be >= 1");
  if (fpca_components < 1) throw InvalidArgument("test config: fpca_components must be >= 1");
}

PermutationTest fpca_mmd_test(const SampleSet& a, const SampleSet& b, const TestConfig& cfg,
                              std::uint64_t seed) {
  cfg.validate();
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) throw DimensionMismatch("fpca_mmd_test: dimension mismatch");
  const SampleSet pooled{stack(a.samples, b.samples), a.weight};
  const std::size_t r = std::min<std::size_t>(
      {cfg.fpca_components, pooled.size() - 1, pooled.dim()});
  const FpcaResult f = fpca_scores(pooled, r);
  const double h = median_pairwise_distance(f.scores);
  if (!(h > 0.0)) throw InvalidArgument("fpca_mmd_test: all score vectors coincide");
  Eigen::MatrixXd g;
  // One test runs on one thread; trials are the parallel unit.
  kernels::sq_exp_gram(f.scores, h, g, Exec::serial);

  const auto total_rows = static_cast<Eigen::Index>(pooled.size());
  const auto n = static_cast<Eigen::Index>(a.size());
  const Eigen::VectorXd col_sums = g.colwise().sum().transpose();
  const double total = col_sums.sum();
  const double dn = static_cast<double>(a.size());
  const double dm = static_cast<double>(b.size());

  Eigen::VectorXd in_x = Eigen::VectorXd::Zero(total_rows);
  in_x.head(n).setOnes();
  const double observed = unbiased_from_gram(g, in_x, col_sums, total, dn, dm);

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(total_rows));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(derive_seed(seed, kPermutationStream));
  std::size_t exceed = 0;
  for (std::size_t k = 0; k < cfg.permutations; ++k) {
    std::shuffle(idx.begin(), idx.end(), rng);
    in_x.setZero();
    for (Eigen::Index i = 0; i < n; ++i) in_x[idx[static_cast<std::size_t>(i)]] = 1.0;
    if (unbiased_from_gram(g, in_x, col_sums, total, dn, dm) >= observed) ++exceed;
  }
  const double p = (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(cfg.permutations));
  return {observed, p, p <= cfg.level};
}

double test_power(const SampleSource& gen, const SampleSource& ref, const TestConfig& cfg) {
  cfg.validate();
  std::vector<char> rejected(cfg.trials, 0);
  kernels::for_each_index(cfg.trials, cfg.exec, [&](std::size_t trial) {
    const SampleSet a = gen(trial);
    const SampleSet b = ref(trial);
    rejected[trial] = fpca_mmd_test(a, b, cfg, derive_seed(cfg.seed, trial)).reject ? 1 : 0;
  });
  std::size_t count = 0;
  for (char r : rejected) count += static_cast<std::size_t>(r);
  return static_cast<double>(count) / static_cast<double>(cfg.trials);
}

}  // namespace pfode
