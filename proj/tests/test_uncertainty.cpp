#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "genunc/error.hpp"
#include "genunc/posterior/posterior.hpp"
#include "genunc/uncertainty/feature_map.hpp"
#include "genunc/uncertainty/predictive.hpp"
#include "genunc/uncertainty/records_io.hpp"
#include "genunc/uncertainty/scoring.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace genunc;
using namespace genunc::uncertainty;
using diffusion::SamplerSpec;
using diffusion::SeedBundle;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  numeric::RngState st{seed, 0};
  return scale * numeric::gaussian_sample(st, static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
}

struct Fixture {
  diffusion::Checkpoint pretrained = testutil::tiny_checkpoint(50);
  posterior::Ensemble ensemble;
  SamplerSpec ddim = SamplerSpec::ddim(diffusion::NoiseSchedule::linear(), 10);
  std::vector<SeedBundle> bundles;

  Fixture() {
    for (std::uint64_t s = 0; s < 3; ++s) ensemble.members.push_back(testutil::tiny_checkpoint(60 + s));
    for (std::int64_t id = 0; id < 23; ++id) bundles.push_back(diffusion::make_seed_bundle(5, id, 2, ddim));
  }

  posterior::PosteriorSpec post() const { return posterior::make_ensemble_posterior(ensemble); }

  ScoringOptions options(std::size_t M = 3) const {
    ScoringOptions o;
    o.replicas = M;
    o.batch_size = 5;
    return o;
  }
};

void check_same(const std::vector<UncertaintyRecord>& a, const std::vector<UncertaintyRecord>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed_id == b[i].seed_id);
    CHECK(a[i].entropy == b[i].entropy);
    CHECK(a[i].score == b[i].score);
    CHECK(a[i].sample == b[i].sample);
    CHECK(a[i].replicas == b[i].replicas);
    CHECK(a[i].features == b[i].features);
  }
}

}  // namespace

TEST_CASE("moment match on two points") {
  Matrix e(2, 2);
  e << 1.0, -3.0, 3.0, 5.0;
  const auto g = moment_match(e, 0.5);
  CHECK(g.mean[0] == 2.0);
  CHECK(g.mean[1] == 1.0);
  CHECK(g.variance[0] == 1.0 + 0.5);
  CHECK(g.variance[1] == 16.0 + 0.5);
  CHECK(g.sem_noise == 0.5);
}

TEST_CASE("moment match agrees with the two-pass oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix e = random_matrix(2 + static_cast<Eigen::Index>(seed % 7), 6, seed, 3.0);
    const double sigma2 = 1e-3 * static_cast<double>(seed + 1);
    const auto g = moment_match(e, sigma2);
    std::vector<double> mean, var;
    oracle::two_pass(e, sigma2, mean, var);
    for (std::size_t c = 0; c < mean.size(); ++c) {
      CHECK(std::abs(g.mean[static_cast<Eigen::Index>(c)] - mean[c]) <= 1e-12);
      CHECK(std::abs(g.variance[static_cast<Eigen::Index>(c)] - var[c]) <= 1e-12);
    }
  }
}

TEST_CASE("moment match stays accurate far from the origin") {
  Matrix e(3, 1);
  e << 1e8 + 1.0, 1e8 + 2.0, 1e8 + 3.0;
  const auto g = moment_match(e, 1e-3);
  CHECK(std::abs(g.variance[0] - (2.0 / 3.0 + 1e-3)) <= 1e-7);
}

TEST_CASE("moment match argument errors") {
  CHECK_THROWS_AS(moment_match(Matrix(0, 2), 1e-3), ConfigError);
  CHECK_THROWS_AS(moment_match(Matrix::Zero(2, 2), 0.0), ConfigError);
  CHECK_THROWS_AS(moment_match(Matrix::Zero(2, 2), -1.0), ConfigError);
}

TEST_CASE("gaussian entropy closed form") {
  PredictiveGaussian g;
  g.mean = Vector::Zero(3);
  g.variance = Vector::Constant(3, 2.0);
  CHECK(gaussian_entropy(g) == doctest::Approx(1.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * 2.0)));
  g.variance << 1.0, 4.0, 0.25;
  CHECK(gaussian_entropy(g) == doctest::Approx(1.5 * std::log(2.0 * std::numbers::pi * std::numbers::e)));
  g.variance[1] = 0.0;
  CHECK_THROWS_AS(gaussian_entropy(g), NumericError);
  PredictiveGaussian empty;
  CHECK_THROWS_AS(gaussian_entropy(empty), DimensionError);
}

TEST_CASE("gaussian entropy matches Monte Carlo") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Matrix e = random_matrix(5, 4, 100 + seed);
    const auto g = moment_match(e, 1e-3);
    std::vector<double> var(g.variance.data(), g.variance.data() + g.variance.size());
    const double mc = oracle::mc_entropy(var, 400000, seed);
    CHECK(std::abs(gaussian_entropy(g) - mc) <= 0.01);
  }
}

TEST_CASE("entropy shifts by d log c under joint scaling") {
  const Matrix e = random_matrix(4, 3, 7);
  const double c = 3.5;
  const double h = gaussian_entropy(moment_match(e, 1e-2));
  const double hc = gaussian_entropy(moment_match(c * e, 1e-2 * c * c));
  CHECK(hc - h == doctest::Approx(3.0 * std::log(c)).epsilon(1e-12));
  const Matrix shifted = e.rowwise() + Eigen::RowVectorXd::Constant(3, 42.0);
  CHECK(gaussian_entropy(moment_match(shifted, 1e-2)) == doctest::Approx(h).epsilon(1e-10));
}

TEST_CASE("identical replicas hit the noise floor") {
  const Matrix e = Matrix::Constant(6, 4, 0.3);
  const auto g = moment_match(e, 1e-3);
  CHECK(g.variance == Vector::Constant(4, 1e-3));
  CHECK(gaussian_entropy(g) == doctest::Approx(2.0 * std::log(2.0 * std::numbers::pi * std::numbers::e * 1e-3)));
  CHECK(pixelwise_uncertainty(e, 1e-3) == g.variance);
}

TEST_CASE("signed permutations leave the entropy unchanged") {
  Matrix p = Matrix::Zero(3, 3);
  p(0, 2) = -1.0;
  p(1, 0) = 1.0;
  p(2, 1) = -1.0;
  const auto proj = FeatureMap::projection(p);
  const auto id = FeatureMap::identity(3);
  const Matrix x = random_matrix(5, 3, 9);
  const double a = gaussian_entropy(moment_match(id.apply(x), 1e-3));
  const double b = gaussian_entropy(moment_match(proj.apply(x), 1e-3));
  CHECK(std::abs(a - b) <= 1e-12);
}

TEST_CASE("feature maps") {
  const auto rp = FeatureMap::random_projection(6, 3, 4);
  const Matrix& p = rp.projection_matrix();
  CHECK(((p * p.transpose()) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(rp.output_dim() == 3);
  CHECK(rp.apply(random_matrix(2, 6, 1)).cols() == 3);
  CHECK_THROWS_AS(FeatureMap::random_projection(2, 3, 0), ConfigError);
  CHECK_THROWS_AS(rp.apply(random_matrix(2, 5, 1)), DimensionError);
  CHECK_THROWS_AS(FeatureMap::identity(2).apply(random_matrix(2, 3, 1)), DimensionError);
  Matrix dep(2, 3);
  dep << 1, 2, 3, 2, 4, 6;
  CHECK_THROWS_AS(FeatureMap::projection(dep), NumericError);

  const auto dir = testutil::scratch("embeddings");
  {
    std::ofstream f(dir / "emb.csv");
    f << "sample_id,e_0,e_1\n" << sample_id(4, 0) << ",1,2\n" << sample_id(4, 1) << ",3,5\n";
  }
  const auto emb = FeatureMap::embedding_file(dir / "emb.csv");
  CHECK(emb.output_dim() == 2);
  const Matrix got = emb.apply(Matrix::Zero(2, 2), {sample_id(4, 1), sample_id(4, 0)});
  CHECK(got(0, 1) == 5.0);
  CHECK(got(1, 0) == 1.0);
  CHECK_THROWS_AS(emb.apply(Matrix::Zero(1, 2), {sample_id(9, 0)}), ConfigError);
  CHECK_THROWS_AS(FeatureMap::embedding_file(dir / "absent.csv"), IoError);
}

TEST_CASE("scoring is independent of thread count, batch size and input order") {
  Fixture f;
  const auto gen = f.ddim;
  auto o1 = f.options();
  const auto base = score_batch(f.bundles, f.pretrained, f.post(), gen, gen, FeatureMap::identity(2), o1);
  auto o3 = o1;
  o3.threads = 3;
  o3.batch_size = 2;
  check_same(base, score_batch(f.bundles, f.pretrained, f.post(), gen, gen, FeatureMap::identity(2), o3));

  auto shuffled = f.bundles;
  numeric::Rng rng(3);
  rng.shuffle(shuffled);
  check_same(base, score_batch(shuffled, f.pretrained, f.post(), gen, gen, FeatureMap::identity(2), o1));
  for (std::size_t i = 1; i < base.size(); ++i) CHECK(base[i - 1].seed_id < base[i].seed_id);

  const auto one = score_seed(f.bundles[7], f.pretrained, f.post(), gen, gen, FeatureMap::identity(2), o1);
  check_same({base[7]}, {one});
}

TEST_CASE("scored records are consistent with their replicas") {
  Fixture f;
  auto o = f.options();
  const auto recs = score_batch(f.bundles, f.pretrained, f.post(), f.ddim, f.ddim, FeatureMap::identity(2), o);
  const numeric::Mlp net(f.pretrained.net);
  for (const auto& r : recs) {
    const auto& bundle = f.bundles[static_cast<std::size_t>(r.seed_id)];
    CHECK(r.sample == diffusion::sample(net, f.pretrained.sampling_params(), &f.pretrained.schedule, f.ddim, bundle));
    for (std::size_t m = 0; m < 3; ++m) {
      const Vector xm = diffusion::sample(net, f.ensemble.members[m].sampling_params(), &f.pretrained.schedule,
                                          f.ddim, bundle);
      CHECK(Vector(r.replicas.row(static_cast<Eigen::Index>(m)).transpose()) == xm);
    }
    std::vector<double> mean, var;
    oracle::two_pass(r.replicas, o.sigma2, mean, var);
    double h = 0.0;
    for (double v : var) h += 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * v);
    CHECK(r.entropy == doctest::Approx(h).epsilon(1e-12));
    CHECK(r.score == r.entropy);
  }
}

TEST_CASE("distance mode scores mean squared distance to the pretrained sample") {
  Fixture f;
  auto o = f.options(1);
  CHECK(o.resolved_mode() == ScoreMode::distance_to_pretrained);
  const auto recs = score_batch(f.bundles, f.pretrained, f.post(), f.ddim, f.ddim, FeatureMap::identity(2), o);
  for (const auto& r : recs) {
    const double d0 = r.replicas(0, 0) - r.sample[0];
    const double d1 = r.replicas(0, 1) - r.sample[1];
    CHECK(r.score == doctest::Approx(d0 * d0 + d1 * d1).epsilon(1e-12));
  }
  auto o2 = f.options(2);
  o2.mode = ScoreMode::distance_to_pretrained;
  for (const auto& r : score_batch(f.bundles, f.pretrained, f.post(), f.ddim, f.ddim, FeatureMap::identity(2), o2)) {
    double want = 0.0;
    for (Eigen::Index m = 0; m < 2; ++m) want += (r.replicas.row(m).transpose() - r.sample).squaredNorm();
    CHECK(r.score == doctest::Approx(want / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("including the pretrained sample adds it to the moments") {
  Fixture f;
  auto o = f.options();
  o.include_pretrained = true;
  for (const auto& r : score_batch(f.bundles, f.pretrained, f.post(), f.ddim, f.ddim, FeatureMap::identity(2), o)) {
    CHECK(r.features.rows() == 4);
    CHECK(r.entropy == doctest::Approx(gaussian_entropy(moment_match(r.features, o.sigma2))).epsilon(1e-14));
  }
}

TEST_CASE("scoring NFE accounting") {
  Fixture f;
  const auto coarse = SamplerSpec::ddim(diffusion::NoiseSchedule::linear(), 4);
  NfeCount nfe;
  auto o = f.options(2);
  score_batch(f.bundles, f.pretrained, f.post(), f.ddim, coarse, FeatureMap::identity(2), o, {}, &nfe);
  CHECK(nfe.generation == 23u * 10u);
  CHECK(nfe.scoring == 23u * 2u * 4u);
}

TEST_CASE("stochastic generation with coupled replica noise") {
  Fixture f;
  const auto schedule = diffusion::NoiseSchedule::linear();
  const auto fine = SamplerSpec::ddpm(schedule, 20);
  const auto coarse = SamplerSpec::ddpm(schedule, 5);
  std::vector<SeedBundle> bundles;
  for (std::int64_t id = 0; id < 6; ++id) bundles.push_back(diffusion::make_seed_bundle(8, id, 2, fine));
  auto o = f.options();
  const auto a = score_batch(bundles, f.pretrained, f.post(), fine, coarse, FeatureMap::identity(2), o);
  const auto b = score_batch(bundles, f.pretrained, f.post(), fine, coarse, FeatureMap::identity(2), o);
  check_same(a, b);
  for (const auto& r : a) CHECK(std::isfinite(r.entropy));
}

TEST_CASE("laplace replicas with zero variance collapse to the floor") {
  Fixture f;
  posterior::LaplaceState state;
  const numeric::Mlp net(f.pretrained.net);
  state.offset = net.last_layer_offset();
  state.layer_names = net.last_layer_names();
  state.mean = f.pretrained.sampling_params().values().tail(static_cast<Eigen::Index>(net.last_layer_size()));
  state.fisher_diag = Vector::Zero(state.mean.size());
  state.posterior_variance = Vector::Zero(state.mean.size());
  state.source_hash = f.pretrained.hash();
  const auto post = posterior::make_laplace_posterior(f.pretrained, state);
  auto o = f.options();
  const double floor = std::log(2.0 * std::numbers::pi * std::numbers::e * o.sigma2);
  for (const auto& r : score_batch(f.bundles, f.pretrained, post, f.ddim, f.ddim, FeatureMap::identity(2), o)) {
    CHECK(r.entropy == doctest::Approx(floor).epsilon(1e-14));
    for (Eigen::Index m = 0; m < 3; ++m) CHECK(Vector(r.replicas.row(m).transpose()) == r.sample);
  }
  state.source_hash = "0000";
  posterior::PosteriorSpec stale = posterior::LaplacePosterior{f.pretrained.sampling_params(), state};
  CHECK_THROWS_AS(score_batch(f.bundles, f.pretrained, stale, f.ddim, f.ddim, FeatureMap::identity(2), o),
                  HashMismatchError);
}

TEST_CASE("scoring argument errors") {
  Fixture f;
  auto o = f.options();
  auto dup = f.bundles;
  dup[3].seed_id = 2;
  CHECK_THROWS_AS(score_batch(dup, f.pretrained, f.post(), f.ddim, f.ddim, FeatureMap::identity(2), o), ConfigError);
  const int cond[2] = {0, 1};
  CHECK_THROWS_AS(
      score_batch(f.bundles, f.pretrained, f.post(), f.ddim, f.ddim, FeatureMap::identity(2), o, cond), ConfigError);
  auto bad = o;
  bad.sigma2 = 0.0;
  CHECK_THROWS_AS(score_batch(f.bundles, f.pretrained, f.post(), f.ddim, f.ddim, FeatureMap::identity(2), bad),
                  ConfigError);
  auto many = f.options(4);
  CHECK_THROWS_AS(score_batch(f.bundles, f.pretrained, f.post(), f.ddim, f.ddim, FeatureMap::identity(2), many),
                  ConfigError);
  CHECK(score_mode_from_string("distance") == ScoreMode::distance_to_pretrained);
  CHECK_THROWS_AS(score_mode_from_string("variance"), ConfigError);
}

TEST_CASE("records and score files round trip") {
  Fixture f;
  const auto dir = testutil::scratch("records");
  auto o = f.options();
  const auto recs = score_batch(f.bundles, f.pretrained, f.post(), f.ddim, f.ddim, FeatureMap::identity(2), o);
  write_records_sidecar(dir / "records.bin", recs);
  check_same(recs, read_records_sidecar(dir / "records.bin"));
  write_records_csv(dir / "records.csv", recs);
  std::ifstream in(dir / "records.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "seed_id,cond,entropy");

  ScoreColumn col{{3, 1, 2}, {0.1, std::numeric_limits<double>::infinity(), -2.5e-300}};
  write_scores_csv(dir / "scores.csv", col);
  const auto back = read_scores_csv(dir / "scores.csv");
  CHECK(back.seed_ids == col.seed_ids);
  CHECK(back.values == col.values);
  CHECK_THROWS_AS(read_scores_csv(dir / "records.csv"), ConfigError);
}

TEST_CASE("entropy aggregated by condition") {
  std::vector<UncertaintyRecord> recs(5);
  const double h[5] = {1.0, 2.0, 4.0, -1.0, 3.0};
  const std::optional<int> c[5] = {0, 0, 2, std::nullopt, 2};
  for (std::size_t i = 0; i < 5; ++i) {
    recs[i].entropy = h[i];
    recs[i].cond = c[i];
  }
  const auto agg = aggregate_by_condition(recs);
  CHECK(agg.size() == 3);
  CHECK(agg.at(0) == 1.5);
  CHECK(agg.at(2) == 3.5);
  CHECK(agg.at(-1) == -1.0);
}
