#include <doctest.h>

#include <fstream>
#include <random>
#include <thread>

#include "meco/core/error.hpp"
#include "meco/knowledge/operations.hpp"
#include "meco/repository/event_log.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace meco;
using namespace meco::knowledge;
using namespace meco::repository;
using meco::test::RepoFixture;

namespace {

const WorkspaceId kWs("w1");
const UserId u1("u1"), u2("u2");

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

ProblemDefinition problem(std::string id, std::string statement, std::vector<std::string> keywords = {},
                          std::set<std::string> domains = {}, std::vector<Indicator> indicators = {},
                          std::string objective = "") {
  ProblemDefinition p;
  p.id = ProblemId(std::move(id));
  p.statement = std::move(statement);
  p.objective = std::move(objective);
  p.keywords = std::move(keywords);
  p.domains = std::move(domains);
  p.indicators = std::move(indicators);
  return p;
}

// A mixed workload touching every fold rule.
void scripted_activity(RepoFixture& f, std::mt19937& rng, int steps) {
  auto& repo = *f;
  auto root = create_problem(repo, kWs, "cassava plantation in West Africa", "import", u1);
  for (int i = 0; i < steps; ++i) {
    f.clock.advance(std::chrono::milliseconds(rng() % 50));
    UserId who("u" + std::to_string(rng() % 3));
    switch (rng() % 7) {
      case 0: repo.append_event(kWs, who, ChatMessage{"m" + std::to_string(i)}); break;
      case 1: repo.append_event(kWs, who, QuerySubmitted{"q" + std::to_string(i), "Google"}); break;
      case 2: add_sub_problem(repo, root.id, "sub " + std::to_string(i), who); break;
      case 3: annotate(repo, EntityRef::problem(root.id), "note", AnnotationKind::clarification, who); break;
      case 4: {
        DocumentRecord d{DocumentId("d" + std::to_string(i)), "http://x.org/" + std::to_string(i), "t",
                         "cassava text", who, f.clock.now()};
        repo.append_event(kWs, who, DocumentOpened{d, true, std::nullopt, std::nullopt});
        tag_document(repo, d.id, "tag", who);
        break;
      }
      case 5: revise_problem(repo, root.id, {.keywords = std::vector<std::string>{"k" + std::to_string(i)}}, who); break;
      default: view_history(repo, kWs, who); break;
    }
  }
}

}  // namespace

TEST_CASE("event line format is fixed") {
  ActivityEvent e{7, UserId("u1"), kWs, meco::test::t0(), QuerySubmitted{"cassava \"exporters\"", "Google"}};
  auto line = encode_event_line(e);
  CHECK(line ==
        "{\"seq\":7,\"timestamp\":\"2025-10-09T08:53:20.000Z\",\"actor\":\"u1\",\"kind\":\"query_submitted\","
        "\"process\":\"combination\",\"payload\":{\"query\":\"cassava \\\"exporters\\\"\",\"source\":\"Google\"}}\n");
  CHECK(decode_event_line(std::string_view(line).substr(0, line.size() - 1), kWs) == e);

  auto forged = line;
  forged.replace(forged.find("combination"), 11, "socialization");
  CHECK_THROWS_AS(decode_event_line(forged.substr(0, forged.size() - 1), kWs), Error);
}

TEST_CASE("append_event assigns consecutive sequence numbers") {
  RepoFixture f;
  f->create_workspace(kWs);
  CHECK(f->append_event(kWs, u1, ChatMessage{"first"}).seq == 1);
  CHECK(f->append_event(kWs, u1, ChatMessage{"second"}).seq == 2);
  CHECK_THROWS_AS(f->append_event(WorkspaceId("missing"), u1, ChatMessage{"x"}), Error);
  try {
    f->append_event(WorkspaceId("missing"), u1, ChatMessage{"x"});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_workspace);
  }
  // An event that would break an invariant is refused and not logged.
  CHECK_THROWS_AS(f->append_event(kWs, u1, ViewSync{u2, DocumentId("nope")}), Error);
  CHECK(f->workspace(kWs).high_water() == 2);
}

TEST_CASE("1000 events from 8 concurrent actors get exactly seqs 1..1000") {
  RepoFixture f(SyncMode::fsync);
  f->create_workspace(kWs);
  std::vector<std::thread> actors;
  std::mutex mu;
  std::vector<Seq> seen;
  for (int a = 0; a < 8; ++a) {
    actors.emplace_back([&, a] {
      for (int i = 0; i < 125; ++i) {
        auto e = f->append_event(kWs, UserId("u" + std::to_string(a)), ChatMessage{std::to_string(i)});
        std::lock_guard lock(mu);
        seen.push_back(e.seq);
      }
    });
  }
  for (auto& t : actors) t.join();
  std::sort(seen.begin(), seen.end());
  REQUIRE(seen.size() == 1000);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    CHECK(seen[i] == i + 1);
  }
  auto events = f->workspace(kWs).events_since(0);
  for (std::size_t i = 1; i < events.size(); ++i) {
    CHECK(events[i].timestamp >= events[i - 1].timestamp);
  }
  f.reopen();
  CHECK(f->workspace(kWs).high_water() == 1000);
}

TEST_CASE("a failed append leaves no trace") {
  std::atomic<int> mode{0};  // 0 ok, 1 fail outright, 2 write half then fail
  RepoFixture f;
  f.options.writers = [&](const std::filesystem::path& path, SyncMode sync) -> std::unique_ptr<LogWriter> {
    return std::make_unique<FileLogWriter>(path, sync, [&](int fd, const void* data, std::size_t size) -> ssize_t {
      if (mode == 1) {
        errno = EIO;
        return -1;
      }
      if (mode == 2) {
        mode = 1;
        return ::write(fd, data, size / 2);
      }
      return ::write(fd, data, size);
    });
  };
  f.reopen();
  f->create_workspace(kWs);
  f->append_event(kWs, u1, ChatMessage{"kept"});
  auto before = f->workspace(kWs).state();
  auto log = slurp(f.dir.path() / "w1" / kEventLogFile);

  for (int m : {1, 2}) {
    mode = m;
    try {
      f->append_event(kWs, u1, ChatMessage{"lost"});
      FAIL("append should fail");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::storage_failure);
    }
    CHECK(f->workspace(kWs).state() == before);
    CHECK(slurp(f.dir.path() / "w1" / kEventLogFile) == log);
  }
  mode = 0;
  CHECK(f->append_event(kWs, u1, ChatMessage{"after"}).seq == 2);

  f.options.writers = default_log_writer_factory();
  f.reopen();
  auto events = f->workspace(kWs).events_since(0);
  REQUIRE(events.size() == 2);
  CHECK(std::get<ChatMessage>(events[1].payload).body == "after");
}

TEST_CASE("replay after restart reproduces the live state") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    RepoFixture f;
    f.options.store.snapshot_every = 7;
    f.reopen();
    f->create_workspace(kWs);
    scripted_activity(f, rng, 60);
    auto live = f->workspace(kWs).state();
    f.reopen();
    CHECK(f->workspace(kWs).state() == live);
    // The snapshot file is a fold of some prefix of the log.
    auto snap = state_from_json(nlohmann::json::parse(slurp(f.dir.path() / "w1" / kSnapshotFile)));
    CHECK(snap.seq == live.seq);
    CHECK(snap == live);
  }
}

TEST_CASE("empty workspace replays to an empty state") {
  RepoFixture f;
  f->create_workspace(kWs);
  f.reopen();
  auto s = f->workspace(kWs).state();
  CHECK(s.seq == 0);
  CHECK(s.problems.empty());
}

TEST_CASE("torn and corrupt logs") {
  RepoFixture f;
  f->create_workspace(kWs);
  for (int i = 0; i < 3; ++i) f->append_event(kWs, u1, ChatMessage{"m"});
  f.repo.reset();
  auto path = f.dir.path() / "w1" / kEventLogFile;
  auto intact = slurp(path);
  auto last_start = intact.rfind('\n', intact.size() - 2) + 1;

  SUBCASE("truncated trailing record is reported at its offset") {
    spit(path, intact.substr(0, intact.size() - 5));
    auto read = read_event_log(path, kWs);
    CHECK(read.events.size() == 2);
    REQUIRE(read.corruption);
    CHECK(read.corruption->offset == last_start);
    CHECK(read.corruption->line == 3);

    f.options.repair_torn_tail = false;
    try {
      f.open();
      FAIL("open should fail");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::corrupt_log);
      CHECK(std::string(e.what()).find(std::to_string(last_start)) != std::string::npos);
    }
    f.options.repair_torn_tail = true;
    f.open();
    CHECK(f->workspace(kWs).high_water() == 2);
    CHECK(f->append_event(kWs, u1, ChatMessage{"again"}).seq == 3);
  }
  SUBCASE("a damaged middle record is never repaired") {
    auto damaged = intact;
    damaged[intact.find("\"seq\":2") + 6] = '9';
    spit(path, damaged);
    CHECK_THROWS_AS(f.open(), Error);
  }
}

TEST_CASE("problem_similarity examples") {
  auto p = problem("p", "cassava plantation in West Africa", {"cassava", "export"}, {"agriculture"},
                   {{"crop", "cassava"}}, "import");
  CHECK(problem_similarity(p, p).value == doctest::Approx(1.0).epsilon(1e-12));

  auto q = problem("q", "ghana gold mining", {"gold"}, {"mining"}, {{"metal", "gold"}});
  CHECK(problem_similarity(p, q).value == 0.0);

  auto a = problem("a", "alpha", {"cassava", "export"});
  auto b = problem("b", "beta", {"Cassava"});
  auto s = problem_similarity(a, b);
  CHECK(s.parts.keywords == 0.5);
  CHECK(s.parts.domains == 0.0);
  CHECK(s.parts.indicators == 0.0);
  CHECK(s.parts.text == 0.0);
  CHECK(s.value == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("property: similarity is symmetric, bounded and self-maximal") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    auto corpus = meco::test::random_corpus(rng);
    for (const auto& x : corpus) {
      for (const auto& y : corpus) {
        auto xy = problem_similarity(x.problem, y.problem);
        auto yx = problem_similarity(y.problem, x.problem);
        CHECK(xy.value == yx.value);
        CHECK(xy.value >= 0.0);
        CHECK(xy.value <= 1.0);
        CHECK(xy.value == meco::test::oracle_similarity(x.problem, y.problem));
        const auto& p = x.problem;
        if (!p.keywords.empty() && !p.domains.empty() && !p.indicators.empty() && !p.statement.empty()) {
          CHECK(problem_similarity(p, p).value >= xy.value - 1e-12);
        }
      }
    }
  }
}

TEST_CASE("search_repository") {
  std::vector<StoredProblem> corpus;
  auto add = [&](std::string id, std::string statement, std::vector<std::string> keywords, int age) {
    StoredProblem e;
    e.workspace = kWs;
    e.problem = problem(std::move(id), std::move(statement), std::move(keywords));
    e.problem.timestamp = meco::test::t0() - std::chrono::hours(age);
    corpus.push_back(std::move(e));
  };
  add("p1", "cassava plantation in West Africa", {"cassava"}, 5);
  add("p2", "major exporters of cassava in West Africa", {"exporters", "cassava"}, 4);
  add("p3", "gold mining in Ghana", {"gold"}, 3);
  add("p4", "cassava exporters", {}, 2);
  add("p5", "local consumption of cassava in Nigeria", {"consumption"}, 1);

  SUBCASE("empty query") { CHECK(search_repository(corpus, "", 5).empty()); }
  SUBCASE("exact statement ranks first") {
    auto hits = search_repository(corpus, "gold mining in Ghana", 5);
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].entry.problem.id == ProblemId("p3"));
  }
  SUBCASE("ranking equals brute-force cosine over all five") {
    auto query = "cassava exporters";
    struct Row {
      double score;
      Timestamp ts;
      std::string id;
    };
    std::vector<Row> expected;
    for (const auto& e : corpus) {
      std::string text = e.problem.statement + " " + e.problem.objective;
      for (const auto& k : e.problem.keywords) text += " " + k;
      double s = meco::test::oracle_cosine(meco::test::oracle_tokens(query), meco::test::oracle_tokens(text));
      if (s > 0) expected.push_back({s, e.problem.timestamp, e.problem.id.str()});
    }
    std::sort(expected.begin(), expected.end(), [](const Row& a, const Row& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.ts != b.ts) return a.ts > b.ts;
      return a.id < b.id;
    });
    auto hits = search_repository(corpus, query, 5);
    REQUIRE(hits.size() == expected.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      CHECK(hits[i].entry.problem.id.str() == expected[i].id);
      CHECK(hits[i].score == doctest::Approx(expected[i].score).epsilon(1e-12));
    }
    CHECK(search_repository(corpus, query, 2).size() == 2);
  }
}

TEST_CASE("recommend_collaborators examples") {
  RecommendOptions options;
  auto current = problem("cur", "cassava plantation in West Africa", {"cassava"}, {"agriculture"},
                         {{"crop", "cassava"}});
  auto offline = [](const UserId&) { return false; };

  CHECK(recommend_collaborators({}, current, {}, 5, options, offline).empty());

  StoredProblem twin{WorkspaceId("w2"), current, {UserId("u2")}};
  twin.problem.id = ProblemId("twin");
  std::vector<StoredProblem> corpus = {twin};
  auto r = recommend_collaborators(corpus, current, {}, 5, options, [](const UserId& u) { return u.str() == "u2"; });
  REQUIRE(r.size() == 1);
  CHECK(r[0].user == UserId("u2"));
  CHECK(r[0].affinity == doctest::Approx(1.0));
  CHECK(r[0].online);

  // Current problem's own participants are never suggested.
  CHECK(recommend_collaborators(corpus, current, {UserId("u2")}, 5, options, offline).empty());
}

TEST_CASE("recommend_collaborators matches a pairwise oracle on hand-built overlaps") {
  auto current = problem("cur", "cassava exporters west africa", {"cassava", "export"}, {"agriculture", "trade"},
                         {{"crop", "cassava"}});
  std::vector<StoredProblem> corpus = {
      {WorkspaceId("w1"), problem("a", "cassava exporters", {"cassava"}, {"agriculture"}), {UserId("ann")}},
      {WorkspaceId("w2"), problem("b", "gold", {"gold"}, {"mining"}), {UserId("bob"), UserId("ann")}},
      {WorkspaceId("w3"), problem("c", "west africa trade", {"export", "cassava"}, {"trade"}, {{"crop", "cassava"}}),
       {UserId("cat"), UserId("bob")}},
      {WorkspaceId("w4"), problem("d", "nigeria", {"Cassava"}), {UserId("cat")}},
  };
  RecommendOptions options;
  for (std::size_t k = 1; k <= 4; ++k) {
    auto got = recommend_collaborators(corpus, current, {}, k, options, nullptr);
    auto want = meco::test::oracle_recommend(corpus, current, {}, k, options.threshold);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].user == want[i].user);
      CHECK(got[i].affinity == want[i].affinity);
    }
  }
}

TEST_CASE("property: recommendations equal the oracle and ignore storage order") {
  std::mt19937_64 rng(17);
  RecommendOptions options;
  for (int trial = 0; trial < 200; ++trial) {
    auto corpus = meco::test::random_corpus(rng);
    const auto& current = corpus[rng() % corpus.size()];
    std::set<UserId> exclude = rng() % 2 ? current.participants : std::set<UserId>{};
    std::size_t k = 1 + rng() % 5;
    auto got = recommend_collaborators(corpus, current.problem, exclude, k, options, nullptr);
    auto want = meco::test::oracle_recommend(corpus, current.problem, exclude, k, options.threshold);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].user == want[i].user);
      CHECK(got[i].affinity == want[i].affinity);
    }
    auto shuffled = corpus;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(recommend_collaborators(shuffled, current.problem, exclude, k, options, nullptr) == got);
  }
}

TEST_CASE("corpus and indexes span workspaces") {
  RepoFixture f;
  f->create_workspace(WorkspaceId("a"));
  f->create_workspace(WorkspaceId("b"));
  auto p = create_problem(*f, WorkspaceId("a"), "cassava", "", u1);
  auto q = create_problem(*f, WorkspaceId("b"), "gold", "", u2);
  auto child = add_sub_problem(*f, p.id, "exporters", u2);
  CHECK(f->workspace_of(child.id) == WorkspaceId("a"));
  CHECK(f->workspace_of(q.id) == WorkspaceId("b"));
  auto corpus = f->corpus();
  CHECK(corpus.size() == 3);
  CHECK(f->problem(p.id).participants == std::set<UserId>{u1, u2});
  CHECK_THROWS_AS(f->create_workspace(WorkspaceId("a")), Error);
  CHECK_THROWS_AS(f->create_workspace(WorkspaceId("../escape")), Error);
  f.reopen();
  CHECK(f->corpus().size() == 3);
  CHECK(f->workspace_of(child.id) == WorkspaceId("a"));
}
