#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "wrl/evaluate.hpp"
#include "wrl/io.hpp"
#include "wrl/rng.hpp"

using namespace wrl;

namespace {

std::string temp_dir(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

DenseNet uniform_actor() { return DenseNet::zeros({4, 2}, OutputHead::Softmax); }

DenseNet biased_actor() {
  DenseNet net = DenseNet::zeros({4, 2}, OutputHead::Softmax);
  std::vector<double> p = net.params();
  p.back() = 3.0;  // output bias of action 1
  net.set_params(p);
  return net;
}

}  // namespace

TEST_CASE("sample statistics use the population convention") {
  const EvalStats st = stats_of({2, 4, 6});
  CHECK(st.mean == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(st.std_dev == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
  CHECK(st.episodes == 3);

  const EvalStats one = stats_of({5});
  CHECK(one.mean == 5.0);
  CHECK(one.std_dev == 0.0);
  CHECK(one.episodes == 1);

  CHECK_THROWS_AS((void)stats_of({}), std::invalid_argument);
}

TEST_CASE("greedy sampler consumes no randomness and breaks ties low") {
  const DenseNet actor = uniform_actor();
  const ActionSampler greedy = make_policy_sampler(actor, EvalMode::Greedy);
  const std::vector<double> s{0.1, -0.2, 0.3, -0.4};

  Rng rng(3), mirror(3);
  CHECK(greedy(s, rng) == 0);  // exact tie, smallest index
  CHECK(rng.uniform() == mirror.uniform());

  const ActionSampler stochastic = make_policy_sampler(actor, EvalMode::Stochastic);
  Rng rng2(3), mirror2(3);
  (void)stochastic(s, rng2);
  CHECK(rng2.uniform() != mirror2.uniform());  // exactly the categorical draw was spent

  const ActionSampler preferring = make_policy_sampler(biased_actor(), EvalMode::Greedy);
  CHECK(preferring(s, rng) == 1);

  const DenseNet critic = DenseNet::zeros({4, 1}, OutputHead::Linear);
  CHECK_THROWS_WITH_AS((void)make_policy_sampler(critic, EvalMode::Greedy),
                       doctest::Contains("softmax head"), std::invalid_argument);
}

TEST_CASE("episode evaluation walks consecutive seeds") {
  const DenseNet actor = uniform_actor();
  const CartPoleParams params;

  const std::vector<int> counts = evaluate_episodes(actor, params, 3, 100, EvalMode::Stochastic);
  REQUIRE(counts.size() == 3);
  const ActionSampler sampler = make_policy_sampler(actor, EvalMode::Stochastic);
  for (int i = 0; i < 3; ++i) {
    const EpisodeResult ep = run_episode(sampler, params, 100 + i, params.max_steps);
    CHECK(counts[i] == ep.survived_steps);
  }
  CHECK(evaluate_episodes(actor, params, 3, 100, EvalMode::Stochastic) == counts);
  CHECK(evaluate_episodes(actor, params, 3, 101, EvalMode::Stochastic) != counts);

  CHECK_THROWS_AS((void)evaluate_episodes(actor, params, 0, 0, EvalMode::Greedy),
                  std::invalid_argument);
}

TEST_CASE("policy evaluation is the statistics of its episode counts") {
  const DenseNet actor = uniform_actor();
  const CartPoleParams params;
  const EvalStats st = evaluate_policy(actor, params, 5, 42, EvalMode::Greedy);
  const EvalStats direct = stats_of(evaluate_episodes(actor, params, 5, 42, EvalMode::Greedy));
  CHECK(st.mean == direct.mean);
  CHECK(st.std_dev == direct.std_dev);
  CHECK(st.episodes == 5);
}

TEST_CASE("default grids and the parameter override") {
  CHECK(default_grid("force_mag") == std::vector<double>{5, 10, 20, 40, 60, 80, 100, 120});
  CHECK(default_grid("mass_pole") ==
        std::vector<double>{0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5});
  CHECK_THROWS_AS((void)default_grid("gravity"), std::invalid_argument);

  const CartPoleParams base;
  CHECK(with_parameter(base, "force_mag", 55.0).force_mag == 55.0);
  CHECK(with_parameter(base, "force_mag", 55.0).mass_pole == base.mass_pole);
  CHECK(with_parameter(base, "mass_pole", 0.33).mass_pole == 0.33);
  CHECK_THROWS_AS((void)with_parameter(base, "tau", 0.01), std::invalid_argument);
}

TEST_CASE("sweep rows are policy-major in the given grid order") {
  SweepSpec spec;
  spec.grid = {12.0, 8.0, 10.0};  // deliberately unsorted
  spec.episodes_per_point = 2;
  spec.seed_base = 7;
  spec.policies.push_back({"uniform", uniform_actor()});
  spec.policies.push_back({"pushy", biased_actor()});

  const SweepReport rep = run_sweep(spec);
  REQUIRE(rep.rows.size() == 6);
  const std::vector<std::string> want_policy{"uniform", "uniform", "uniform",
                                             "pushy",   "pushy",   "pushy"};
  const std::vector<double> want_value{12, 8, 10, 12, 8, 10};
  for (int i = 0; i < 6; ++i) {
    CHECK(rep.rows[i].policy == want_policy[i]);
    CHECK(rep.rows[i].value == want_value[i]);
    CHECK(rep.rows[i].parameter == "force_mag");
    CHECK(rep.rows[i].episodes == 2);
    CHECK(rep.rows[i].mean >= 1.0);  // an episode always survives at least a step
  }
  CHECK(rep.mode == "stochastic");
  CHECK(rep.seed_base == 7);

  // Scheduling must not leak into the results: rerun and compare.
  const SweepReport again = run_sweep(spec);
  for (int i = 0; i < 6; ++i) {
    CHECK(rep.rows[i].mean == again.rows[i].mean);
    CHECK(rep.rows[i].std_dev == again.rows[i].std_dev);
  }
}

TEST_CASE("duplicated grid values replay the same seeds") {
  SweepSpec spec;
  spec.grid = {10.0, 10.0};
  spec.episodes_per_point = 3;
  spec.policies.push_back({"uniform", uniform_actor()});
  const SweepReport rep = run_sweep(spec);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].mean == rep.rows[1].mean);
  CHECK(rep.rows[0].std_dev == rep.rows[1].std_dev);
}

TEST_CASE("an empty grid falls back to the parameter default") {
  SweepSpec spec;
  spec.parameter = "mass_pole";
  spec.episodes_per_point = 1;
  spec.mode = EvalMode::Greedy;
  spec.policies.push_back({"uniform", uniform_actor()});
  const SweepReport rep = run_sweep(spec);
  REQUIRE(rep.rows.size() == 8);
  CHECK(rep.rows[0].value == 0.05);
  CHECK(rep.rows[7].value == 1.5);
  CHECK(rep.mode == "greedy");
}

TEST_CASE("sweep specs are validated before any work") {
  SweepSpec ok;
  ok.policies.push_back({"uniform", uniform_actor()});
  CHECK_NOTHROW(ok.validate());

  SweepSpec bad = ok;
  bad.parameter = "gravity";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.episodes_per_point = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.grid = {10.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.policies.push_back({"critic", DenseNet::zeros({4, 1}, OutputHead::Linear)});
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("'critic' is not a softmax actor"),
                       std::invalid_argument);
}

TEST_CASE("report files are a pure function of the report") {
  SweepReport rep;
  rep.episodes_per_point = 2;
  rep.mode = "greedy";
  rep.max_steps = 200;
  rep.rows = {
      {"robust", "force_mag", 5.0, 150.0, 10.0, 2},  {"robust", "force_mag", 10.0, 180.0, 5.0, 2},
      {"robust", "force_mag", 20.0, 120.0, 30.0, 2}, {"base", "force_mag", 5.0, 90.0, 20.0, 2},
      {"base", "force_mag", 10.0, 110.0, 15.0, 2},   {"base", "force_mag", 20.0, 60.0, 25.0, 2},
  };

  const std::string d1 = temp_dir("wrl_eval_rep1");
  const std::string d2 = temp_dir("wrl_eval_rep2");
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
  const std::vector<std::string> w1 = emit_report(rep, d1);
  const std::vector<std::string> w2 = emit_report(rep, d2);

  REQUIRE(w1.size() == 2);
  CHECK(w1[0] == d1 + "/sweep.csv");
  CHECK(w1[1] == d1 + "/sweep_force_mag.svg");
  CHECK(read_text_file(w1[0]) == read_text_file(w2[0]));
  CHECK(read_text_file(w1[1]) == read_text_file(w2[1]));

  const std::string csv = read_text_file(w1[0]);
  CHECK(csv.rfind("policy,parameter,value,mean,std,n\nrobust,force_mag,5,150,10,2\n", 0) == 0);

  const std::string svg = read_text_file(w1[1]);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("survived steps vs force_mag") != std::string::npos);
  CHECK(svg.find("robust") != std::string::npos);
  CHECK(svg.find("base") != std::string::npos);

  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("an empty report emits only the csv header") {
  const std::string dir = temp_dir("wrl_eval_empty");
  std::filesystem::remove_all(dir);
  const std::vector<std::string> written = emit_report(SweepReport{}, dir);
  REQUIRE(written.size() == 1);
  CHECK(read_text_file(written[0]) == "policy,parameter,value,mean,std,n\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("policy names are escaped in the plot") {
  SweepReport rep;
  rep.rows = {{"a<b", "force_mag", 5.0, 10.0, 1.0, 1}, {"a<b", "force_mag", 10.0, 12.0, 1.0, 1}};
  const std::string dir = temp_dir("wrl_eval_escape");
  std::filesystem::remove_all(dir);
  const std::vector<std::string> written = emit_report(rep, dir);
  REQUIRE(written.size() == 2);
  const std::string svg = read_text_file(written[1]);
  CHECK(svg.find("a&lt;b") != std::string::npos);
  CHECK(svg.find("a<b") == std::string::npos);
  std::filesystem::remove_all(dir);
}
