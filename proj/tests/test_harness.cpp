#include <gtest/gtest.h>

#include "dyniso/harness.hpp"

using namespace dyniso;
using namespace dyniso::harness;

namespace {

std::string parse_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    return e.what();
  }
  return "";
}

// Report lines with the timing field blanked.
std::vector<std::string> untimed(const RunResult& res) {
  std::vector<std::string> out;
  for (auto r : res.records) {
    r.micros = 0;
    out.push_back(r.to_json().dump());
  }
  return out;
}

}  // namespace

TEST(Parse, GraphScenario) {
  const auto sc = parse_scenario("graph 3 directed\nbatch\nins 1 2 1\nq reach 1 2\n");
  EXPECT_FALSE(sc.matrix);
  EXPECT_TRUE(sc.directed);
  ASSERT_EQ(sc.batches.size(), 1u);
  EXPECT_EQ(sc.batches[0].changes.size(), 1u);
  EXPECT_EQ(sc.query_count(), 1u);
  EXPECT_EQ(sc.batches[0].changes[0].a, 0u);
  EXPECT_EQ(sc.batches[0].changes[0].b, 1u);
}

TEST(Parse, MatrixScenario) {
  const auto sc = parse_scenario("matrix 2 5\nbatch\nset 1 1 3\nq rank\n");
  EXPECT_TRUE(sc.matrix);
  EXPECT_EQ(sc.prime, 5u);
  EXPECT_EQ(sc.batches[0].queries[0].kind, Query::Kind::rank);
}

TEST(Parse, MissingFieldNamesLineAndField) {
  const auto msg = parse_error("graph 3 directed\nbatch\nins 1\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("<v>"), std::string::npos) << msg;
}

TEST(Parse, CommentsAndBlankLines) {
  const auto sc = parse_scenario("# header next\n\ngraph 4 undirected weighted  # trailing\nbatch\nins 1 3 7\n");
  EXPECT_TRUE(sc.weighted);
  EXPECT_EQ(sc.batches[0].changes[0].value, 7u);
}

TEST(Parse, Rejections) {
  EXPECT_NE(parse_error("graph 3 directed\nbatch\nins 1 4\n").find("out of range"), std::string::npos);
  EXPECT_NE(parse_error("batch\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse_error("matrix 3 4\n").find("not a prime"), std::string::npos);
  EXPECT_NE(parse_error("graph 3 directed\nins 1 2\n").find("outside a batch"), std::string::npos);
  EXPECT_NE(parse_error("graph 3 directed\nbatch\nins 1 2 5\n").find("not weighted"), std::string::npos);
  EXPECT_NE(parse_error("graph 3 directed\nbatch\nset 1 2 5\n").find("matrix"), std::string::npos);
  EXPECT_NE(parse_error("graph 3 directed\nbatch\nq frob\n").find("unknown query"), std::string::npos);
  EXPECT_NE(parse_error("graph 3 directed\nbatch\nq reach 1 2\nins 1 2\n").find("after a query"), std::string::npos);
  EXPECT_NE(parse_error("graph 3 directed\nbatch\nins 2 2\n").find("self loop"), std::string::npos);
  EXPECT_NE(parse_error("graph 3 directed\nbatch\nins 1 x\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_error("graph 3 directed\nbatch\nwarp 1 2\n").find("unknown directive"), std::string::npos);
  EXPECT_NE(parse_error("").find("missing graph or matrix header"), std::string::npos);
}

TEST(Run, SingleEdgeReach) {
  const auto sc = parse_scenario("graph 3 directed\nbatch\nins 1 2\nq reach 1 2\n");
  const auto res = run_scenario(sc, Mode::reach, {.verify = true});
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.records[0].answer, true);
  EXPECT_EQ(res.records[0].match, std::optional<bool>(true));
  EXPECT_TRUE(res.ok());
}

TEST(Run, DistAfterDeleteIsInfinite) {
  const auto sc = parse_scenario(
      "graph 3 directed weighted\nbatch\nins 1 2 3\nq dist 1 2\nbatch\ndel 1 2\nq dist 1 2\nq path 1 2\n");
  const auto res = run_scenario(sc, Mode::dist, {.verify = true});
  ASSERT_EQ(res.records.size(), 3u);
  EXPECT_EQ(res.records[0].answer, 3);
  EXPECT_EQ(res.records[1].answer, "inf");
  EXPECT_TRUE(res.records[2].answer.is_null());
  EXPECT_TRUE(res.ok());
}

TEST(Run, RandomRankScenarioHasNoMismatch) {
  const auto sc = parse_scenario(gen_scenario(Mode::rank, 10, 100, 3, 11));
  const auto res = run_scenario(sc, Mode::rank, {.verify = true});
  EXPECT_EQ(res.records.size(), 100u);
  EXPECT_TRUE(res.ok());
}

TEST(Run, MatchDetScenarioHasNoMismatch) {
  const auto sc = parse_scenario(gen_scenario(Mode::match_det, 8, 50, 3, 1));
  const auto res = run_scenario(sc, Mode::match_det, {.verify = true});
  EXPECT_EQ(res.records.size(), 100u);
  EXPECT_EQ(res.mismatches, 0u);
  EXPECT_EQ(res.errors, 0u);
}

TEST(Run, MismatchedModeIsRejected) {
  const auto sc = parse_scenario("matrix 2 5\nbatch\nset 1 1 3\nq rank\n");
  EXPECT_THROW(run_scenario(sc, Mode::reach), Error);
  const auto same_side = parse_scenario("graph 4 undirected\nbatch\nins 1 2\n");
  EXPECT_THROW(run_scenario(same_side, Mode::match_det), Error);
}

TEST(Run, UnsupportedQueryIsAnErrorRecord) {
  const auto sc = parse_scenario("graph 4 undirected\nbatch\nins 1 3\nq witness\n");
  const auto res = run_scenario(sc, Mode::match_rank);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_FALSE(res.records[0].error.empty());
  EXPECT_FALSE(res.ok());
}

TEST(Run, BipartiteWitnessUsesScenarioIds) {
  const auto sc = parse_scenario("graph 4 undirected\nbatch\nins 4 1\nq witness\n");
  const auto res = run_scenario(sc, Mode::match_det, {.verify = true});
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.records[0].answer.dump(), "[[1,4]]");
  EXPECT_TRUE(res.ok());
}

TEST(Gen, SameSeedSameBytes) {
  EXPECT_EQ(gen_scenario(Mode::rank, 4, 10, 2, 7), gen_scenario(Mode::rank, 4, 10, 2, 7));
  EXPECT_EQ(gen_scenario(Mode::dist, 6, 20, 3, 7), gen_scenario(Mode::dist, 6, 20, 3, 7));
  EXPECT_NE(gen_scenario(Mode::dist, 6, 20, 3, 7), gen_scenario(Mode::dist, 6, 20, 3, 8));
}

TEST(Gen, RankRoundTrip) {
  const auto sc = parse_scenario(gen_scenario(Mode::rank, 4, 10, 2, 7));
  EXPECT_EQ(sc.batches.size(), 10u);
  for (std::size_t b = 1; b < sc.batches.size(); ++b) EXPECT_EQ(sc.batches[b].changes.size(), 2u);
}

TEST(HarnessProperty, RoundTripAndVerifiedGrid) {
  for (Mode m : {Mode::rank, Mode::reach, Mode::dist, Mode::match_det, Mode::match_rank})
    for (std::size_t n : {3, 6})
      for (std::size_t k : {1, 3})
        for (u64 seed : {1, 2}) {
          const auto sc = parse_scenario(gen_scenario(m, n, 12, k, seed));
          EXPECT_EQ(sc.batches.size(), 12u);
          const auto res = run_scenario(sc, m, {.seed = seed, .verify = true});
          EXPECT_TRUE(res.ok()) << mode_name(m) << " n=" << n << " k=" << k << " seed=" << seed << " "
                                << res.abort_reason;
        }
}

TEST(HarnessProperty, ReportsAreDeterministic) {
  for (Mode m : {Mode::rank, Mode::dist, Mode::match_det, Mode::match_rank}) {
    const auto sc = parse_scenario(gen_scenario(m, 6, 15, 2, 4));
    EXPECT_EQ(untimed(run_scenario(sc, m, {.verify = true})), untimed(run_scenario(sc, m, {.verify = true})));
  }
}

TEST(Timing, ReportsEveryDynamicBatch) {
  const auto sc = parse_scenario(gen_scenario(Mode::rank, 16, 20, 4, 2));
  const auto rep = time_scenario(sc, Mode::rank);
  EXPECT_EQ(rep.batches, 19u);
  EXPECT_GT(rep.scratch_micros, 0);
  const auto j = rep.to_json();
  EXPECT_TRUE(j.contains("speedup"));
}
