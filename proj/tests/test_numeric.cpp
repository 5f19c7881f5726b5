#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "genunc/error.hpp"
#include "genunc/numeric/adam.hpp"
#include "genunc/numeric/container.hpp"
#include "genunc/numeric/gradcheck.hpp"
#include "genunc/numeric/mlp.hpp"
#include "genunc/numeric/params_io.hpp"
#include "genunc/numeric/rng.hpp"
#include "oracles.hpp"

using namespace genunc;
using namespace genunc::numeric;

namespace {

MlpConfig small_net(Activation a = Activation::silu, std::size_t cond = 0) {
  MlpConfig c;
  c.input_dim = 2;
  c.hidden_dims = {16, 16};
  c.output_dim = 2;
  c.activation = a;
  c.time_embed_dim = 8;
  c.condition_count = cond;
  return c;
}

struct Batch {
  Matrix x;
  std::vector<double> t;
  std::vector<int> cond;
  Matrix dy;
};

Batch random_batch(std::size_t B, std::size_t conds, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.x.resize(static_cast<Eigen::Index>(B), 2);
  b.dy.resize(static_cast<Eigen::Index>(B), 2);
  for (std::size_t i = 0; i < B; ++i) {
    b.x(i, 0) = rng.normal();
    b.x(i, 1) = rng.normal();
    b.dy(i, 0) = rng.normal();
    b.dy(i, 1) = rng.normal();
    b.t.push_back(1.0 + 999.0 * rng.uniform());
    if (conds) b.cond.push_back(static_cast<int>(rng.below(conds)));
  }
  return b;
}

}  // namespace

TEST_CASE("rng streams are reproducible and forks are independent") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng(42).next_u64() != c.next_u64());
  Rng parent(7);
  auto before = parent.state();
  Rng f1 = parent.fork(1), f2 = parent.fork(2);
  CHECK(parent.state() == before);
  CHECK(f1.next_u64() != f2.next_u64());
  CHECK(Rng(7).fork(1).next_u64() == Rng(7).fork(1).next_u64());

  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(5) < 5);
  }
}

TEST_CASE("rng state resumes a stream mid-way") {
  Rng a(11);
  a.next_u64();
  a.normal();
  Rng b(a.state());
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("gaussian_sample determinism and moments") {
  RngState s1{5, 0}, s2{5, 0}, s3{6, 0};
  Matrix a = gaussian_sample(s1, 50, 3);
  Matrix b = gaussian_sample(s2, 50, 3);
  CHECK(a == b);
  CHECK(s1.counter > 0);
  CHECK(s1 == s2);
  CHECK(a != gaussian_sample(s3, 50, 3));
  Matrix c = gaussian_sample(s1, 50, 3);
  CHECK(c != a);

  RngState big{2024, 0};
  Matrix z = gaussian_sample(big, 100000, 2);
  for (int col = 0; col < 2; ++col) {
    double mean = z.col(col).mean();
    double var = (z.col(col).array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
  }
}

TEST_CASE("param vector layout round trip") {
  Mlp net(small_net(Activation::silu, 3));
  ParamVector p = net.init(1);
  auto blocks = p.unflatten();
  ParamVector q = ParamVector::from_blocks(blocks);
  CHECK(q.layout() == p.layout());
  CHECK(q.values() == p.values());
  std::size_t total = 0;
  for (const auto& s : p.layout()) {
    CHECK(s.offset == total);
    total += s.size();
  }
  CHECK(total == p.size());
  CHECK(p.layout().back().name == "out.bias");
  CHECK(net.last_layer_offset() + net.last_layer_size() == p.size());
}

TEST_CASE("param vector rejects overlapping layouts") {
  std::vector<LayerSlot> bad = {{"a", 2, 2, 0}, {"b", 1, 2, 3}};
  CHECK_THROWS_AS(ParamVector{bad}, Error);
}

TEST_CASE("mlp forward matches scalar reference") {
  for (auto act : {Activation::relu, Activation::silu, Activation::tanh}) {
    MlpConfig cfg = small_net(act, 4);
    Mlp net(cfg);
    ParamVector p = net.init(0);
    Vector x(2);
    x << 0.5, -0.5;
    Vector y = net.forward_one(p, x, 10.0);
    auto ref = oracle::mlp_forward(cfg, p, {0.5, -0.5}, 10.0);
    CHECK(y(0) == doctest::Approx(ref[0]).epsilon(1e-12));
    CHECK(y(1) == doctest::Approx(ref[1]).epsilon(1e-12));
    Vector yc = net.forward_one(p, x, 10.0, 2);
    auto refc = oracle::mlp_forward(cfg, p, {0.5, -0.5}, 10.0, 2);
    CHECK(yc(0) == doctest::Approx(refc[0]).epsilon(1e-12));
    CHECK(yc(1) == doctest::Approx(refc[1]).epsilon(1e-12));
  }
}

TEST_CASE("mlp with zero weights outputs zero") {
  Mlp net(small_net());
  ParamVector p(net.layout());
  Vector x(2);
  x << 3.0, -1.0;
  CHECK(net.forward_one(p, x, 17.0).norm() == 0.0);
}

TEST_CASE("mlp identity-initialized output layer passes its input through") {
  MlpConfig cfg = small_net(Activation::relu);
  cfg.hidden_dims = {2};
  cfg.time_embed_dim = 2;
  Mlp net(cfg);
  ParamVector p(net.layout());
  // hidden = relu(x) with the time embedding ignored; out = identity.
  p.block("hidden0.weight")(0, 0) = 1.0;
  p.block("hidden0.weight")(1, 1) = 1.0;
  p.block("out.weight")(0, 0) = 1.0;
  p.block("out.weight")(1, 1) = 1.0;
  Vector x(2);
  x << 1.0, 2.0;
  Vector y = net.forward_one(p, x, 0.0);
  CHECK(y(0) == 1.0);
  CHECK(y(1) == 2.0);
}

TEST_CASE("mlp reports dimension errors with the layer name") {
  Mlp net(small_net());
  ParamVector p = net.init(0);
  Matrix x(1, 3);
  x.setZero();
  std::vector<double> t{1.0};
  try {
    net.forward(p, x, t);
    FAIL("expected a dimension error");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("hidden0") != std::string::npos);
  }
  Matrix ok(1, 2);
  ok.setZero();
  std::vector<int> cond{0};
  CHECK_THROWS_AS(net.forward(p, ok, t, cond), DimensionError);
}

TEST_CASE("backward matches finite differences for every activation") {
  for (auto act : {Activation::relu, Activation::silu, Activation::tanh}) {
    Mlp net(small_net(act, 3));
    ParamVector p = net.init(9);
    Batch b = random_batch(4, 3, 17);
    ForwardCache cache;
    net.forward(p, b.x, b.t, b.cond, &cache);
    ParamVector g = net.backward(p, cache, b.dy);
    auto objective = [&](const ParamVector& q) {
      Matrix y = net.forward(q, b.x, b.t, b.cond);
      return (y.array() * b.dy.array()).sum();
    };
    Vector fd = central_differences(objective, p, 1e-4);
    CHECK(max_relative_error(g.values(), fd, 1e-6) < 1e-4);
  }
}

TEST_CASE("backward edge cases") {
  Mlp net(small_net());
  ParamVector p = net.init(3);
  Batch b = random_batch(3, 0, 4);
  ForwardCache cache;
  net.forward(p, b.x, b.t, {}, &cache);
  Matrix zero = Matrix::Zero(3, 2);
  CHECK(net.backward(p, cache, zero).values().norm() == 0.0);

  ParamVector other = net.init(4);
  CHECK_THROWS_AS(net.backward(other, cache, b.dy), Error);
}

TEST_CASE("single linear layer gradient has the closed form") {
  // One hidden unit with zero weights isolates the output bias and lets the
  // output weights see a constant hidden activation.
  MlpConfig cfg = small_net(Activation::tanh);
  cfg.hidden_dims = {1};
  Mlp net(cfg);
  ParamVector p(net.layout());
  p.block("hidden0.bias")(0, 0) = 0.5;
  p.block("out.weight")(0, 0) = 2.0;
  p.block("out.weight")(1, 0) = -1.0;
  Batch b = random_batch(1, 0, 8);
  ForwardCache cache;
  Matrix y = net.forward(p, b.x, b.t, {}, &cache);
  Matrix target(1, 2);
  target << 0.3, 0.1;
  Matrix dy = 2.0 * (y - target);
  ParamVector g = net.backward(p, cache, dy);
  const double h = std::tanh(0.5);
  CHECK(g.block("out.weight")(0, 0) == doctest::Approx(dy(0, 0) * h).epsilon(1e-14));
  CHECK(g.block("out.weight")(1, 0) == doctest::Approx(dy(0, 1) * h).epsilon(1e-14));
  CHECK(g.block("out.bias")(0, 0) == doctest::Approx(dy(0, 0)).epsilon(1e-14));
}

TEST_CASE("per-example last-layer gradients sum to the batch gradient") {
  Mlp net(small_net(Activation::silu, 2));
  ParamVector p = net.init(5);
  Batch b = random_batch(6, 2, 6);
  ForwardCache cache;
  net.forward(p, b.x, b.t, b.cond, &cache);
  ParamVector g = net.backward(p, cache, b.dy);
  Matrix per = net.last_layer_per_example_grads(cache, b.dy);
  CHECK(per.rows() == 6);
  CHECK(static_cast<std::size_t>(per.cols()) == net.last_layer_size());
  Vector summed = per.colwise().sum().transpose();
  Vector tail = g.values().tail(static_cast<Eigen::Index>(net.last_layer_size()));
  CHECK((summed - tail).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adam single step, zero gradient and quadratic descent") {
  ParamVector p = ParamVector::from_blocks({{"w", Matrix::Constant(1, 1, 1.0)}});
  ParamVector g = ParamVector::from_blocks({{"w", Matrix::Constant(1, 1, 1.0)}});
  AdamState s = AdamState::init(1, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  adam_step(s, p, g);
  CHECK(s.step_count == 1);
  CHECK(p.values()(0) == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-12));

  ParamVector q = ParamVector::from_blocks({{"w", Matrix::Constant(1, 2, 3.0)}});
  AdamState s0 = AdamState::init(2);
  adam_step(s0, q, q.zeros_like());
  CHECK(q.values()(0) == 3.0);
  CHECK(s0.step_count == 1);

  // f(w) = 0.5 |w|^2, gradient w.
  ParamVector w = ParamVector::from_blocks({{"w", Matrix::Constant(1, 3, 2.0)}});
  AdamState sq = AdamState::init(3, AdamConfig{0.05});
  double f0 = 0.5 * w.values().squaredNorm();
  adam_step(sq, w, w);
  double f1 = 0.5 * w.values().squaredNorm();
  adam_step(sq, w, w);
  double f2 = 0.5 * w.values().squaredNorm();
  CHECK(f1 < f0);
  CHECK(f2 < f1);
}

TEST_CASE("adam rejects non-finite gradients naming the coordinate") {
  ParamVector p = ParamVector::from_blocks({{"w", Matrix::Zero(1, 3)}});
  ParamVector g = p.zeros_like();
  g.values()(2) = std::nan("");
  AdamState s = AdamState::init(3);
  try {
    adam_step(s, p, g);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
}

TEST_CASE("gradcheck helpers") {
  ParamVector p = ParamVector::from_blocks({{"w", Matrix::Constant(1, 2, 0.5)}});
  auto f = [](const ParamVector& q) { return q.values()(0) * q.values()(0) + 3.0 * q.values()(1); };
  Vector fd = central_differences(f, p);
  CHECK(fd(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(fd(1) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(1.0, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("container round trip and corruption detection") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "genunc_test_container";
  fs::create_directories(dir);
  Mlp net(small_net(Activation::tanh, 2));
  ParamVector p = net.init(12);
  Container c;
  c.kind = "params";
  c.meta = {{"note", "x"}};
  put_params(c, "theta", net.config(), p);
  c.save(dir / "p.bin");
  Container back = Container::load(dir / "p.bin", "params");
  ParamVector q = get_params(back, "theta");
  CHECK(q.layout() == p.layout());
  CHECK(q.values() == p.values());
  CHECK(file_hash(dir / "p.bin") == file_hash(dir / "p.bin"));
  CHECK_THROWS_AS(Container::load(dir / "p.bin", "checkpoint"), Error);

  std::string bytes = c.to_bytes();
  bytes[0] = 'X';
  CHECK_THROWS_AS(Container::from_bytes(bytes), Error);
  fs::remove_all(dir);
}
