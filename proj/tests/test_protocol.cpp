#include <doctest.h>

#include <sstream>

#include "ltcr/cartpole.hpp"
#include "ltcr/demo_io.hpp"
#include "ltcr/errors.hpp"
#include "ltcr/metrics.hpp"
#include "ltcr/protocol.hpp"
#include "ltcr/trainer.hpp"

using namespace ltcr;

namespace {

AgentConfig cartpole_agent_config() {
  AgentConfig c;
  c.shape.input_dim = 4;
  c.shape.hidden = {16};
  c.shape.action_count = 2;
  c.shape.atom_count = 5;
  c.v_min = 0.0;
  c.v_max = 50.0;
  c.replay_capacity = 4096;
  c.batch_size = 8;
  c.warmup_frames = 50;
  c.target_sync_steps = 50;
  c.epsilon.decay_frames = 500;
  c.adam.learning_rate = 1e-3;
  return c;
}

ProtocolConfig small_protocol(const std::string& preset) {
  ProtocolConfig p;
  p.schedule = PhaseSchedule::preset(preset);
  p.schedule.revisit_steps /= 20;  // 50 / 45+5 / ... keep tests quick
  p.schedule.digest_steps /= 20;
  p.schedule.frames_per_round = 200;
  p.subset_size = 16;
  p.probe_size = 32;
  p.eval_interval = 100;
  return p;
}

std::unique_ptr<TeamEnv> cartpole_team(int size) {
  CartPoleEnv prototype;
  return std::make_unique<IndependentTeamEnv>(prototype, size);
}

TeamTrainer make_trainer(int team, const std::string& preset, MetricsSink* sink,
                         std::uint64_t seed = 4242) {
  std::vector<AgentConfig> configs(team, cartpole_agent_config());
  return TeamTrainer(configs, small_protocol(preset), cartpole_team(team), seed,
                     sink);
}

}  // namespace

TEST_CASE("soft_target averages teacher distributions") {
  CHECK(soft_target({{1.0, 0.0}, {0.0, 1.0}}) == std::vector<double>{0.5, 0.5});
  const std::vector<double> single{0.25, 0.5, 0.25};
  CHECK(soft_target({single}) == single);
  CHECK_THROWS_AS(soft_target(std::vector<std::vector<double>>{}),
                  ContractViolation);

  Rng rng(6);
  std::vector<std::vector<double>> three;
  for (int t = 0; t < 3; ++t) {
    std::vector<double> p(7);
    double sum = 0.0;
    for (double& v : p) {
      v = rng.uniform();
      sum += v;
    }
    for (double& v : p) v /= sum;
    three.push_back(p);
  }
  const auto mean = soft_target(three);
  double total = 0.0;
  for (double v : mean) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("shared memory: eviction, commit atomicity, rollback") {
  SharedMemory mem(4);
  std::vector<FeatureVector> batch;
  for (int i = 0; i < 6; ++i)
    batch.push_back({{static_cast<double>(i)}, i % 2});
  mem.add_features(0, batch);
  CHECK(mem.feature_count() == 4);
  CHECK(mem.evictions() == 2);
  CHECK(mem.feature_at(0).feature.state[0] == 2.0);  // oldest two evicted

  Demonstration d;
  d.round = 0;
  d.teacher_id = 1;
  d.feature = batch[2];
  d.feature_id = mem.feature_at(0).id;
  d.probs = {0.5, 0.5};
  mem.stage(d);
  CHECK(mem.staged_count() == 1);
  CHECK(mem.current_round().empty());  // staged data is invisible

  mem.abort_round();
  CHECK(mem.staged_count() == 0);
  CHECK(mem.committed_rounds() == 0);

  mem.stage(d);
  mem.commit_round();
  CHECK(mem.committed_rounds() == 1);
  CHECK(mem.current_round().size() == 1);

  Demonstration d2 = d;
  d2.round = 1;
  mem.stage(d2);
  mem.stage(d2);
  mem.commit_round();
  CHECK(mem.committed_rounds() == 2);
  CHECK(mem.current_round().size() == 2);

  mem.rollback_round();  // a failed round never becomes visible
  CHECK(mem.committed_rounds() == 1);
  REQUIRE(mem.current_round().size() == 1);
  CHECK(mem.current_round()[0].round == 0);
}

TEST_CASE("phase schedule presets") {
  const PhaseSchedule nine = PhaseSchedule::preset("9-1");
  CHECK(nine.revisit_steps == 900);
  CHECK(nine.digest_steps == 100);
  CHECK(nine.revisit_steps == 9 * nine.digest_steps);
  const PhaseSchedule seven = PhaseSchedule::preset("7-3");
  CHECK(seven.revisit_steps == 700);
  CHECK(seven.digest_steps == 300);
  const PhaseSchedule five = PhaseSchedule::preset("5-5");
  CHECK(five.revisit_steps == five.digest_steps);
  const PhaseSchedule base = PhaseSchedule::preset("baseline");
  CHECK(base.digest_steps == 0);
  CHECK(base.revisit_steps ==
        nine.revisit_steps + nine.digest_steps);  // equal total budget
  CHECK_THROWS_AS(PhaseSchedule::preset("3-7"), ConfigError);
}

TEST_CASE("explore: counting and attribution") {
  MemoryMetricsSink sink(2);
  TeamTrainer trainer = make_trainer(2, "9-1", &sink);

  SUBCASE("zero frames is a no-op") {
    RoundReport rep = trainer.blank_report();
    trainer.phase_explore(0, rep);
    CHECK(trainer.agent(0).replay().size() == 0);
    CHECK(trainer.shared().feature_count() == 0);
  }

  SUBCASE("frames fill replay, uploads follow the rate") {
    RoundReport rep = trainer.blank_report();
    trainer.phase_explore(1000, rep);
    CHECK(trainer.agent(0).replay().size() == 1000);
    CHECK(trainer.agent(1).replay().size() == 1000);
    // Bernoulli(0.1) per frame per agent: mean 100, sigma ~9.5 per agent.
    CHECK(rep.features_added > 120);
    CHECK(rep.features_added < 280);
    CHECK(trainer.shared().feature_count() == rep.features_added);

    // Both agents contributed features.
    bool owner0 = false, owner1 = false;
    for (std::size_t i = 0; i < trainer.shared().feature_count(); ++i) {
      const auto f = trainer.shared().feature_at(i);
      if (f.owner == 0) owner0 = true;
      if (f.owner == 1) owner1 = true;
    }
    CHECK(owner0);
    CHECK(owner1);
  }
}

TEST_CASE("communicate: demonstrations are the teacher's own forward output") {
  TeamTrainer trainer = make_trainer(2, "9-1", nullptr);
  RoundReport rep = trainer.blank_report();
  trainer.phase_explore(300, rep);
  trainer.phase_communicate(rep);

  const auto demos = trainer.shared().current_round();
  REQUIRE(demos.size() > 0);
  CHECK(demos.size() == rep.demos_published);
  for (const Demonstration& d : demos) {
    const auto dists =
        forward_dists(trainer.agent(d.teacher_id).net(), d.feature.state);
    CHECK(d.probs == dists[d.feature.action]);  // exact, by definition
  }
}

TEST_CASE("communicate: same feature, different teachers, different demos") {
  TeamTrainer trainer = make_trainer(2, "9-1", nullptr);
  RoundReport rep = trainer.blank_report();
  trainer.phase_explore(300, rep);
  trainer.phase_communicate(rep);

  const auto demos = trainer.shared().current_round();
  bool found_shared_feature = false;
  for (std::size_t i = 0; i < demos.size() && !found_shared_feature; ++i) {
    for (std::size_t j = i + 1; j < demos.size(); ++j) {
      if (demos[i].feature_id == demos[j].feature_id &&
          demos[i].teacher_id != demos[j].teacher_id) {
        found_shared_feature = true;
        CHECK(demos[i].probs != demos[j].probs);
        break;
      }
    }
  }
  // With 16 samples each from a few dozen features, overlap is expected.
  CHECK(found_shared_feature);
}

TEST_CASE("digest reduces the student's KL against frozen teachers") {
  MemoryMetricsSink sink(2);
  TeamTrainer trainer = make_trainer(2, "5-5", &sink);
  RoundReport rep = trainer.blank_report();
  trainer.phase_explore(400, rep);
  trainer.phase_communicate(rep);
  trainer.phase_digest(rep);
  CHECK(rep.digest_steps_done[0] > 0);
  CHECK_FALSE(rep.digest_skipped[0]);

  // Hammering digest on the same committed round must drive the loss down.
  double last = rep.distill_loss[0];
  for (int i = 0; i < 20; ++i) {
    RoundReport again = trainer.blank_report();
    trainer.phase_digest(again);
    last = again.distill_loss[0];
  }
  CHECK(last < 1e-3);
}

TEST_CASE("run_round: report combinatorics and the two-loss attribution") {
  MemoryMetricsSink sink2(2);
  TeamTrainer two = make_trainer(2, "9-1", &sink2);
  const RoundReport r2 = two.run_round();
  CHECK(r2.pair_kl.size() == 1);
  CHECK(r2.end_frame == 200);

  MemoryMetricsSink sink4(4);
  TeamTrainer four = make_trainer(4, "9-1", &sink4, 77);
  const RoundReport r4 = four.run_round();
  CHECK(r4.pair_kl.size() == 6);  // C(4, 2)

  // Every optimizer update is attributable to exactly one loss.
  for (int i = 0; i < 2; ++i) {
    CHECK(two.agent(i).c51_steps() == r2.revisit_steps_done[i]);
    CHECK(two.agent(i).distill_steps() == r2.digest_steps_done[i]);
  }

  // 9-1 preset: step counts stand in the 9:1 ratio.
  const ProtocolConfig& proto = two.protocol();
  CHECK(proto.schedule.revisit_steps == 9 * proto.schedule.digest_steps);
  CHECK(r2.revisit_steps_done[0] == proto.schedule.revisit_steps);
  CHECK(r2.digest_steps_done[0] == proto.schedule.digest_steps);
}

TEST_CASE("teammate_kl: identical nets give zero, symmetrized is symmetric") {
  TeamTrainer trainer = make_trainer(2, "9-1", nullptr);
  RoundReport rep = trainer.blank_report();
  trainer.phase_explore(300, rep);
  REQUIRE_FALSE(trainer.probe_set().empty());

  CHECK(trainer.teammate_kl(0, 1) > 0.0);  // different inits
  CHECK(trainer.teammate_kl_symmetric(0, 1) ==
        doctest::Approx(trainer.teammate_kl_symmetric(1, 0)).epsilon(1e-12));

  trainer.agent(1).mutable_net() = trainer.agent(0).net();
  CHECK(trainer.teammate_kl(0, 1) == doctest::Approx(0.0));
  CHECK(trainer.teammate_kl(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("digest with no foreign demonstrations is a recorded no-op") {
  MemoryMetricsSink sink(1);
  TeamTrainer solo = make_trainer(1, "5-5", &sink);
  const RoundReport rep = solo.run_round();
  // A single agent only ever sees its own demonstrations.
  CHECK(rep.digest_skipped[0]);
  CHECK(rep.digest_steps_done[0] == 0);
  CHECK(solo.agent(0).distill_steps() == 0);
}

TEST_CASE("demo wire formats round-trip bit-exactly") {
  DemoFile file;
  file.state_dim = 3;
  file.atom_count = 4;
  Rng rng(2024);
  for (int r = 0; r < 20; ++r) {
    Demonstration d;
    d.round = r / 4;
    d.teacher_id = r % 3;
    d.feature.state = {rng.uniform(-10, 10), -0.0, rng.uniform(-1e-300, 1e300)};
    d.feature.action = rng.uniform_int(4);
    std::vector<double> p(4);
    double sum = 0.0;
    for (double& v : p) {
      v = rng.uniform();
      sum += v;
    }
    for (double& v : p) v /= sum;
    d.probs = p;
    file.records.push_back(d);
  }

  SUBCASE("binary") {
    std::stringstream buf;
    write_demos_binary(file, buf);
    const DemoFile back = read_demos_binary(buf);
    REQUIRE(back.records.size() == file.records.size());
    for (std::size_t i = 0; i < file.records.size(); ++i) {
      CHECK(back.records[i].round == file.records[i].round);
      CHECK(back.records[i].teacher_id == file.records[i].teacher_id);
      CHECK(back.records[i].feature.action == file.records[i].feature.action);
      CHECK(back.records[i].feature.state == file.records[i].feature.state);
      CHECK(back.records[i].probs == file.records[i].probs);
    }
  }
  SUBCASE("text") {
    std::stringstream buf;
    write_demos_text(file, buf);
    const DemoFile back = read_demos_text(buf);
    REQUIRE(back.records.size() == file.records.size());
    for (std::size_t i = 0; i < file.records.size(); ++i) {
      CHECK(back.records[i].feature.state == file.records[i].feature.state);
      CHECK(back.records[i].probs == file.records[i].probs);
    }
  }
}

TEST_CASE("demo binary format golden bytes") {
  DemoFile file;
  file.state_dim = 1;
  file.atom_count = 2;
  Demonstration d;
  d.round = 7;
  d.teacher_id = 2;
  d.feature.state = {1.0};
  d.feature.action = 3;
  d.probs = {0.25, 0.75};
  file.records.push_back(d);

  std::stringstream buf;
  write_demos_binary(file, buf);
  const std::string bytes = buf.str();
  std::string hex;
  for (unsigned char c : bytes) {
    char b[3];
    std::snprintf(b, sizeof(b), "%02x", c);
    hex += b;
  }
  CHECK(hex ==
        "4c54435244454d31"      // magic "LTCRDEM1"
        "0100"                  // state_dim = 1
        "0200"                  // atom_count = 2
        "01000000"              // record count = 1
        "07000000"              // round = 7
        "0200"                  // teacher = 2
        "0300"                  // action = 3
        "000000000000f03f"      // state[0] = 1.0
        "000000000000d03f"      // probs[0] = 0.25
        "000000000000e83f");    // probs[1] = 0.75
}

TEST_CASE("demo text format is stable") {
  DemoFile file;
  file.state_dim = 2;
  file.atom_count = 2;
  Demonstration d;
  d.round = 1;
  d.teacher_id = 0;
  d.feature.state = {0.5, -2.0};
  d.feature.action = 1;
  d.probs = {0.5, 0.5};
  file.records.push_back(d);

  std::stringstream buf;
  write_demos_text(file, buf);
  CHECK(buf.str() ==
        "ltcr-demos v1 state_dim=2 atoms=2\n"
        "1 0 1 0.5 -2 | 0.5 0.5\n");
}
