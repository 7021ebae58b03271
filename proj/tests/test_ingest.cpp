#include "doctest.h"
#include "oracles.hpp"
#include "smjp/ingest.hpp"
#include "smjp/model_io.hpp"

using namespace smjp;

namespace {

const char* kTwoEvents =
    "# smjp-events v1\n"
    "# id demo\n"
    "# observations loc1 loc2 reward\n"
    "# actions stay press\n"
    "# meta subject m1\n"
    "time,obs,action\n"
    "0.5,loc1,stay\n"
    "1.25,reward,press\n";

EventSequence random_sequence(Rng& rng) {
  EventSequence seq;
  seq.id = "gen" + std::to_string(rng.uniform_index(1000));
  seq.observations = Alphabet::numbered(AlphabetKind::Observation, 1 + rng.uniform_index(4), "o");
  seq.actions = Alphabet::numbered(AlphabetKind::Action, 1 + rng.uniform_index(3), "act");
  double t = rng.normal() * 100.0;
  const std::size_t n = rng.uniform_index(50);
  for (std::size_t i = 0; i < n; ++i) {
    t += rng.exponential(rng.uniform() < 0.5 ? 1e-3 : 10.0) + 1e-9;
    seq.events.push_back({t, static_cast<int>(rng.uniform_index(seq.observations.size())),
                          static_cast<int>(rng.uniform_index(seq.actions.size()))});
  }
  if (rng.uniform() < 0.5) seq.metadata["source"] = "synthetic run " + std::to_string(n);
  return seq;
}

bool same_sequence(const EventSequence& a, const EventSequence& b) {
  if (a.id != b.id || a.metadata != b.metadata || a.size() != b.size()) return false;
  if (a.observations.labels() != b.observations.labels() || a.actions.labels() != b.actions.labels()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.events[i].time != b.events[i].time || a.events[i].observation != b.events[i].observation ||
        a.events[i].action != b.events[i].action)
      return false;
  return true;
}

}  // namespace

TEST_SUITE("ingest_cli") {
  TEST_CASE("parse a valid event file") {
    const EventSequence seq = parse_event_file(kTwoEvents);
    REQUIRE(seq.size() == 2);
    CHECK(seq.id == "demo");
    CHECK(seq.events[1].time == 1.25);
    CHECK(seq.observations.label(seq.events[1].observation) == "reward");
    CHECK(seq.actions.label(seq.events[1].action) == "press");
    CHECK(seq.metadata.at("subject") == "m1");
  }

  TEST_CASE("parse errors name the line") {
    std::string bad = kTwoEvents;
    bad += "1.0,loc2,stay\n";
    CHECK_THROWS_WITH_AS(parse_event_file(bad), doctest::Contains("NonMonotoneTime: line 9"), Error);
    bad = kTwoEvents;
    bad += "3.0,loc9,stay\n";
    CHECK_THROWS_WITH_AS(parse_event_file(bad), doctest::Contains("UnknownSymbol: line 9"), Error);
    bad = kTwoEvents;
    bad += "3.0,loc1\n";
    CHECK_THROWS_WITH_AS(parse_event_file(bad), doctest::Contains("MalformedLine: line 9"), Error);
    bad = kTwoEvents;
    bad += "abc,loc1,stay\n";
    CHECK_THROWS_WITH_AS(parse_event_file(bad), doctest::Contains("MalformedLine: line 9"), Error);
    CHECK_THROWS_WITH_AS(parse_event_file("time,obs,action\n"), doctest::Contains("line 1"), Error);
  }

  TEST_CASE("write then parse is the identity") {
    Rng rng(1);
    for (int trial = 0; trial < 300; ++trial) {
      const EventSequence seq = random_sequence(rng);
      const std::string text = write_event_file(seq);
      const EventSequence back = parse_event_file(text);
      CHECK(same_sequence(seq, back));
      CHECK(write_event_file(back) == text);
    }
  }

  TEST_CASE("fuzzed input never crashes the parsers") {
    Rng rng(2);
    const std::string base = kTwoEvents;
    const std::string alphabet = "0123456789.,-e#\n abcloc1reward";
    int structured = 0;
    for (int trial = 0; trial < 3000; ++trial) {
      std::string text = base;
      const int edits = 1 + static_cast<int>(rng.uniform_index(6));
      for (int e = 0; e < edits; ++e) {
        const std::size_t pos = rng.uniform_index(text.size() + 1);
        switch (rng.uniform_index(3)) {
          case 0: text.insert(pos, 1, alphabet[rng.uniform_index(alphabet.size())]); break;
          case 1: if (pos < text.size()) text.erase(pos, 1); break;
          default: if (pos < text.size()) text[pos] = static_cast<char>(rng.uniform_index(256)); break;
        }
      }
      try {
        parse_event_file(text);
      } catch (const Error&) {
        ++structured;
      }
      try {
        parse_matrix_doc(text);
      } catch (const Error&) {
      }
      try {
        deserialize_model(text);
      } catch (const Error&) {
      }
    }
    CHECK(structured > 0);
  }

  TEST_CASE("matrix documents round-trip") {
    Rng rng(3);
    const Matrix m = oracle::random_stochastic(3, 4, rng);
    const Matrix back = parse_matrix_doc(write_matrix_doc("joint", m));
    CHECK(back == m);
    CHECK_THROWS_WITH_AS(parse_matrix_doc("# smjp-matrix v1\n# shape 2 2\n1 2\n"), doctest::Contains("MalformedLine"), Error);
  }

  TEST_CASE("agent truth round-trips") {
    std::vector<AgentTruth> truth{{0.0, 2, 1, 0, false, {0, 1}}, {0.5, 9, 4, 1, true, {3, 2}}};
    const auto back = parse_agent_truth(write_agent_truth(truth));
    REQUIRE(back.size() == 2);
    CHECK(back[1].z == 9);
    CHECK(back[1].rewarded);
    CHECK(back[1].bins == std::array<int, 2>{3, 2});
    CHECK(back[1].time == 0.5);
  }

  TEST_CASE("k-means") {
    Rng rng(4);
    Matrix pts(40, 2);
    for (int i = 0; i < 40; ++i) {
      const double cx = i < 20 ? 0.0 : 10.0;
      pts(i, 0) = cx + 0.3 * rng.normal();
      pts(i, 1) = -cx + 0.3 * rng.normal();
    }
    const Quantization one = quantize_locations(pts, 1, 1);
    CHECK((one.centroids.row(0) - pts.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);

    const Quantization two = quantize_locations(pts, 2, 1);
    std::vector<int> truth;
    for (int i = 0; i < 40; ++i) truth.push_back(i < 20 ? 0 : 1);
    CHECK(oracle::same_partition(two.labels, truth));

    Matrix few(6, 2);
    few << 0, 0, 1, 1, 0, 0, 2, 5, 1, 1, 2, 5;
    const Quantization exact = quantize_locations(few, 3, 9);
    CHECK(exact.inertia == 0.0);
    CHECK_THROWS_WITH_AS(quantize_locations(few, 4, 9), doctest::Contains("KTooLarge"), Error);

    const Quantization again = quantize_locations(pts, 2, 1);
    CHECK(again.labels == two.labels);
    CHECK(again.centroids == two.centroids);

    const Matrix parsed = parse_points("# x,y\n1,2\n\n3.5,-4\n");
    CHECK(parsed.rows() == 2);
    CHECK(parsed(1, 1) == -4.0);
  }

  TEST_CASE("run configuration") {
    const RunConfig c = parse_run_config(R"({"seed": 7, "fit": {"restarts": 2}, "belief": {"mapping": "nearest"}})");
    CHECK(c.seed == 7);
    CHECK(c.fit.seed == 7);
    CHECK(c.fit.restarts == 2);
    CHECK(c.belief.mapping == BinMapping::Nearest);
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"sead": 7})"), doctest::Contains("unknown key"), Error);
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"fit": {"restart": 2}})"), doctest::Contains("fit.restart"), Error);
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"n_states": -1})"), doctest::Contains("InvalidConfig"), Error);
    CHECK_THROWS_WITH_AS(parse_run_config("{"), doctest::Contains("InvalidConfig"), Error);
    // The canonical dump parses back to the same configuration.
    CHECK(run_config_json(parse_run_config(run_config_json(c))) == run_config_json(c));
  }

  TEST_CASE("manifest") {
    auto build = [] {
      Manifest m("fit", 3, "{}");
      m.add_argument("n-states", "5");
      m.add_output("model.smjp", "b");
      m.add_output("fit_report.txt", "a");
      m.add_input("events.csv", "x,y");
      return m.str();
    };
    const std::string text = build();
    CHECK(text == build());
    CHECK(text.find("fit_report.txt") < text.find("model.smjp"));
    CHECK(text.find(hex64(fnv1a64("x,y"))) != std::string::npos);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  }
}
