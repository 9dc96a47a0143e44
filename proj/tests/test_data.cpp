#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "feddag/data.hpp"
#include "feddag/errors.hpp"
#include "feddag/metrics.hpp"
#include "feddag/ndag.hpp"
#include "feddag/optim.hpp"

using namespace feddag;
namespace fs = std::filesystem;

namespace {

BenchSpec small_spec(std::uint64_t seed, double style = 1.0) {
  BenchSpec s;
  s.n_domains = 3;
  s.samples_per_domain = 120;
  s.input_dim = 8;
  s.seed = seed;
  s.style_strength = style;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "feddag_test_data";
  fs::create_directories(dir);
  return dir / name;
}

// Accuracy on `test` of a small MLP trained with plain SGD on `train`.
double train_and_score(const std::vector<Sample>& train, const std::vector<Sample>& test,
                       std::size_t dim, std::size_t classes, std::uint64_t seed) {
  TaskArch arch{dim, {16}, 8, classes, Activation::relu};
  std::mt19937_64 rng(seed);
  auto p = init_task_params(arch, rng);
  SgdState state;
  const SgdConfig opt{0.05, 0.9, 5e-4};
  for (int epoch = 0; epoch < 30; ++epoch) {
    const auto order = batch_order(train.size(), rng);
    for (std::size_t s = 0; s < order.size(); s += 16) {
      std::vector<Sample> batch;
      for (std::size_t i = s; i < std::min(order.size(), s + 16); ++i) batch.push_back(train[order[i]]);
      auto step = sgd_step(p, classification_backward(p, arch, batch).grad, opt, std::move(state));
      p = std::move(step.params);
      state = std::move(step.state);
    }
  }
  return evaluate(p, arch, test).acc;
}

// Seed-averaged held-in minus cross-domain accuracy.
double domain_gap(double style) {
  double gap = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto b = make_benchmark(small_spec(seed, style));
    const auto& d0 = b.domains[0];
    std::vector<Sample> cross(b.domains[1].train);
    cross.insert(cross.end(), b.domains[1].val.begin(), b.domains[1].val.end());
    gap += train_and_score(d0.train, d0.val, 8, 3, seed) - train_and_score(d0.train, cross, 8, 3, seed);
  }
  return gap / 5.0;
}

}  // namespace

TEST_CASE("benchmark shape, labels and normalization") {
  const auto b = make_benchmark(BenchSpec{});
  CHECK(b.samples.size() == 3000);
  CHECK(b.domains.size() == 5);
  for (const auto& s : b.samples) {
    CHECK(s.x.size() == 16);
    CHECK(s.label < 3);
    for (double v : s.x) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  for (const auto& d : b.domains) {
    CHECK(d.train.size() + d.val.size() == 600);
    CHECK_FALSE(d.val.empty());
    for (const auto* part : {&d.train, &d.val}) {
      for (const auto& s : *part) CHECK(s.domain == d.domain);
    }
  }
}

TEST_CASE("splits are disjoint and stratified 9:1") {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto spec = small_spec(seed);
    spec.samples_per_domain = 97;  // uneven classes
    const auto b = make_benchmark(spec);
    for (const auto& d : b.domains) {
      std::map<std::size_t, std::size_t> tr, va;
      for (const auto& s : d.train) ++tr[s.label];
      for (const auto& s : d.val) ++va[s.label];
      for (const auto& [label, n_val] : va) {
        const double total = static_cast<double>(n_val + tr[label]);
        CHECK(std::abs(static_cast<double>(n_val) - total / 10.0) <= 1.0);
      }
      for (const auto& s : d.val) {
        CHECK(std::find(d.train.begin(), d.train.end(), s) == d.train.end());
      }
    }
  }
}

TEST_CASE("generation is seed-deterministic") {
  const auto a = make_benchmark(small_spec(11));
  const auto b = make_benchmark(small_spec(11));
  CHECK(a.samples == b.samples);
  CHECK(a.domains == b.domains);
  CHECK_FALSE(make_benchmark(small_spec(12)).samples == a.samples);
  const auto p1 = temp_file("a.csv");
  const auto p2 = temp_file("b.csv");
  export_csv(a, p1);
  export_csv(b, p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("style strength 0 makes domains identically distributed") {
  // With the identity style map, the per-domain class means agree up to
  // sampling noise; with strength 1 they do not.
  auto spread = [](double style) {
    auto spec = small_spec(5, style);
    spec.samples_per_domain = 900;
    const auto b = make_benchmark(spec);
    std::vector<std::vector<double>> mean(3, std::vector<double>(8, 0.0));
    for (const auto& s : b.samples) {
      if (s.label != 0) continue;
      for (std::size_t k = 0; k < 8; ++k) mean[s.domain][k] += s.x[k] / 300.0;
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < 8; ++k) worst = std::max(worst, std::abs(mean[0][k] - mean[1][k]));
    return worst;
  };
  CHECK(spread(0.0) < 0.03);
  CHECK(spread(1.0) > 0.05);
}

TEST_CASE("spec validation") {
  auto s = small_spec(1);
  s.n_domains = 1;
  CHECK_THROWS_AS(make_benchmark(s), ContractError);
  s = small_spec(1);
  s.samples_per_domain = 29;
  CHECK_THROWS_AS(make_benchmark(s), ContractError);
  s = small_spec(1);
  s.label_noise = 0.5;
  CHECK_THROWS_AS(make_benchmark(s), ContractError);
  s = small_spec(1);
  s.style_strength = -0.1;
  CHECK_THROWS_AS(make_benchmark(s), ContractError);
}

TEST_CASE("CSV round trip reproduces the benchmark") {
  const auto b = make_benchmark(small_spec(21));
  const auto path = temp_file("round.csv");
  export_csv(b, path);
  const auto text = slurp(path);
  CHECK(text.substr(0, text.find('\n')) == csv_header(8));
  CHECK(std::count(text.begin(), text.end(), '\n') == 361);
  const auto back = load_csv(path, 21);
  CHECK(back.samples == b.samples);
  CHECK(back.domains == b.domains);
  CHECK(back.n_classes == 3);
  CHECK(back.input_dim == 8);
}

TEST_CASE("CSV guards") {
  const std::string header = "domain,label,f0,f1\n";
  auto rows = [](std::size_t domain, std::size_t n, std::size_t labels) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      out += std::to_string(domain) + "," + std::to_string(i % labels) + "," + std::to_string(i) + ",0.5\n";
    }
    return out;
  };
  CHECK_THROWS_AS(parse_csv(header + "0,0,0.1,0.2\n1,1,0.3,0.4\n", 1), ContractError);
  try {
    parse_csv(header + "0,0,0.1,0.2\n0,2,0.3,0.4\n" + rows(0, 10, 1), 1);
    FAIL("expected an error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("labels must be contiguous") != std::string::npos);
  }
  try {
    parse_csv(header + rows(0, 12, 2) + "0,1,abc,0.1\n", 1);
    FAIL("expected an error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("line 14") != std::string::npos);
  }
  try {
    parse_csv(header + rows(0, 12, 2) + "0,1,0.2\n", 1);
    FAIL("expected an error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("line 14") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("domain,label,x0\n", 1), ContractError);
  CHECK_THROWS_AS(parse_csv("", 1), ContractError);
  CHECK_THROWS_AS(load_csv(temp_file("does_not_exist.csv"), 1), IoError);

  const auto ok = parse_csv(header + rows(0, 12, 2) + rows(1, 10, 2), 3);
  CHECK(ok.domains.size() == 2);
  for (const auto& s : ok.samples) {
    CHECK(s.x[0] >= 0.0);
    CHECK(s.x[0] <= 1.0);
  }
}

TEST_CASE("a domain gap exists and grows with style strength") {
  const double g0 = domain_gap(0.0);
  const double g05 = domain_gap(0.5);
  const double g1 = domain_gap(1.0);
  MESSAGE("seed-averaged gaps: " << g0 << " " << g05 << " " << g1);
  CHECK(g1 > 0.0);
  CHECK(g05 >= g0);
  CHECK(g1 >= g05);
}
