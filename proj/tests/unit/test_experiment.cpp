#include <doctest.h>

#include <fstream>
#include <json.hpp>

#include "support/oracles.hpp"
#include "wce/error.hpp"
#include "wce/experiment.hpp"
#include "wce/synthetic.hpp"

using namespace wce;

namespace {

std::filesystem::path small_fixture() {
  static const auto dir = [] {
    SyntheticConfig cfg;
    cfg.documents = 500;
    cfg.classes = 4;
    cfg.terms_per_class = 20;
    cfg.noise_terms = 40;
    cfg.pretrained_dim = 8;
    const auto d = oracle::temp_dir("experiment_fixture");
    write_synthetic(make_synthetic(cfg), d);
    return d;
  }();
  return dir;
}

std::string fast_keys() {
  return "max_epochs = 4\npatience = 2\nbatch_size = 50\nlearning_rate = 0.01\nmin_df = 2\n";
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config parsing") {
    const auto c = parse_experiment_config_text(
        "# sweep\n"
        "train = data/train.jsonl\n"
        "test = /abs/test.jsonl   # comment\n"
        "pretrained = \"vec#1.txt\"\n"
        "variants = pretrained, pretrained+wce:trainable\n"
        "baseline = pretrained\n"
        "seeds = 0, 1, 2\n"
        "measure = chi2\n"
        "dropout = 0.3\n"
        "random_dims = 10, 20\n",
        "/base");
    CHECK(c.train == std::filesystem::path("/base/data/train.jsonl"));
    CHECK(c.test == std::filesystem::path("/abs/test.jsonl"));
    CHECK(c.pretrained == std::filesystem::path("/base/vec#1.txt"));
    REQUIRE(c.variants.size() == 2);
    CHECK(c.variants[1].variant == Variant::PretrainedWce);
    CHECK(c.variants[1].trainable == true);
    CHECK_FALSE(c.variants[0].trainable.has_value());
    CHECK(c.seeds == std::vector<std::uint64_t>{0, 1, 2});
    CHECK(c.measure == Measure::Chi2);
    CHECK(c.dropout == 0.3);
    CHECK(c.random_dims == std::vector<std::size_t>{10, 20});
  }

  TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_experiment_config_text("colour = blue\n", {}), Error);
    CHECK_THROWS_AS(parse_experiment_config_text("seeds = 1\nseeds = 2\n", {}), Error);
    CHECK_THROWS_AS(parse_experiment_config_text("seeds = -1\n", {}), Error);
    CHECK_THROWS_AS(parse_experiment_config_text("just words\n", {}), Error);
    CHECK_THROWS_AS(parse_variant_spec("pretrained:frozen"), Error);
    CHECK_THROWS_AS(parse_experiment_config("/nonexistent/config.txt"), Error);
  }

  TEST_CASE("mean and sample standard deviation") {
    const std::vector<double> v = {1, 2, 3, 4};
    const auto [m, s] = mean_std(v);
    CHECK(m == 2.5);
    CHECK(s == doctest::Approx(std::sqrt(5.0 / 3.0)));
    const std::vector<double> one = {0.7};
    CHECK(mean_std(one).second == 0.0);
  }

  TEST_CASE("inputs are checked before training") {
    const auto dir = small_fixture();
    auto c = parse_experiment_config_text(
        "train = train.jsonl\ntest = test.jsonl\nvariants = pretrained\n", dir);
    try {
      run_experiment(c);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
      CHECK(std::string(e.what()).find("pretrained") != std::string::npos);
    }
    c.pretrained = dir / "missing.txt";
    CHECK_THROWS_AS(run_experiment(c), Error);
    c.pretrained = dir / "pretrained.txt";
    c.baseline = "wce";
    CHECK_THROWS_AS(run_experiment(c), Error);
  }

  TEST_CASE("two variants over three seeds") {
    const auto dir = small_fixture();
    const auto out = oracle::temp_dir("experiment_out");
    {
      std::ofstream cfg(dir / "sweep.cfg");
      cfg << "train = train.jsonl\ntest = test.jsonl\npretrained = pretrained.txt\n"
          << "variants = pretrained, pretrained+wce\nbaseline = pretrained\nseeds = 0, 1, 2\n"
          << fast_keys() << "out = " << out.string() << "\n";
    }
    const auto res = run_experiment(parse_experiment_config(dir / "sweep.cfg"));
    CHECK(res.runs.size() == 6);
    CHECK(res.aggregates.size() == 2);
    REQUIRE(res.comparisons.size() == 1);
    CHECK(res.comparisons[0].variant == "pretrained+wce");
    CHECK(res.comparisons[0].macro.p_value >= 0.0);
    CHECK(res.comparisons[0].macro.p_value <= 1.0);
    CHECK(res.warnings.empty());
    for (const auto& r : res.runs) {
      CHECK(r.test.macro >= 0.0);
      CHECK(r.test.macro <= 1.0);
    }
    std::vector<double> macro;
    for (const auto& r : res.runs)
      if (r.variant == "pretrained") macro.push_back(r.test.macro);
    CHECK(res.aggregates[0].macro_mean == doctest::Approx(mean_std(macro).first));

    CHECK(std::filesystem::exists(out / "runs" / "pretrained_seed0.json"));
    CHECK(std::filesystem::exists(out / "summary.csv"));
    std::ifstream in(out / "summary.json");
    const auto summary = nlohmann::json::parse(in);
    CHECK(summary["runs"].size() == 6);
    CHECK(summary["significance"].size() == 1);
  }

  TEST_CASE("single seed skips significance with a warning") {
    const auto dir = small_fixture();
    auto c = parse_experiment_config_text("train = train.jsonl\ntest = test.jsonl\n"
                                          "variants = wce, random\nbaseline = random\nseeds = 3\n"
                                          "random_dims = 4, 8\n" +
                                              fast_keys(),
                                          dir);
    const auto res = run_experiment(c);
    CHECK(res.runs.size() == 2);
    CHECK(res.comparisons.empty());
    CHECK(res.warnings.size() == 1);
    CHECK((res.runs[1].random_dim == 4 || res.runs[1].random_dim == 8));
  }

  TEST_CASE("linear learner") {
    const auto dir = small_fixture();
    auto c = parse_experiment_config_text("train = train.jsonl\ntest = test.jsonl\n"
                                          "pretrained = pretrained.txt\nlearner = linear\n"
                                          "variants = pretrained+wce\nseeds = 0\n" +
                                              fast_keys(),
                                          dir);
    const auto res = run_experiment(c);
    REQUIRE(res.runs.size() == 1);
    CHECK(res.runs[0].penalty > 0.0);
    CHECK(res.runs[0].test.macro > 0.3);
  }
}
