// Prints one PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "psychat/http_service.hpp"
#include "psychat/metrics.hpp"
#include "psychat/service.hpp"
#include "support/e2e_fixtures.hpp"
#include "support/loopback.hpp"
#include "support/oracles.hpp"
#include "support/packer_fixtures.hpp"
#include "support/transcript_check.hpp"

using namespace psychat;
using namespace psychat::testing;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string &why) {
        if (pass) detail = why;
        pass = false;
    }
    void check(bool ok, const std::string &why) {
        if (!ok) fail(why);
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RetrievalRecord bare_record(std::uint32_t id, std::vector<float> v) {
    RetrievalRecord r;
    r.record_id = id;
    r.history_string = "[client] h" + std::to_string(id);
    r.vector = std::move(v);
    r.client_utterance = client({sent("h。", "b_desc")});
    r.golden_response = counselor({sent("r。", "s_comfort")});
    r.behaviors = {"b_desc"};
    r.strategies = {"s_comfort"};
    return r;
}

PromptTemplate shipped_template() { return PromptTemplate::load(asset("prompt_template_v1.txt").string()); }

std::vector<std::string> names(const LabelVocabulary &v, Speaker s, const std::vector<LabelId> &ids) {
    std::vector<std::string> out;
    for (const auto &id : ids) out.push_back(v.display_name(s, id));
    return out;
}

std::string join_names(const std::vector<std::string> &xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "、" : "") + xs[i];
    return out;
}

std::size_t count_substr(const std::string &s, const std::string &needle) {
    std::size_t n = 0;
    for (auto at = s.find(needle); at != std::string::npos; at = s.find(needle, at + needle.size())) ++n;
    return n;
}

// ---------------------------------------------------------------------------

Outcome retrieval_exactness() {
    Outcome o;
    std::mt19937_64 rng(1000);
    std::uniform_real_distribution<float> u(-1, 1);
    std::vector<std::vector<float>> pts(1000, std::vector<float>(8));
    for (auto &p : pts)
        for (auto &x : p) x = u(rng);
    // Exact duplicates: 700 copies 10, 800 copies 20.
    pts[700] = pts[10];
    pts[800] = pts[20];
    // Two records equidistant from (5,...,5), far from everything else.
    std::vector<float> far(8, 5.0f);
    pts[900] = far;
    pts[900][0] = 5.25f;
    pts[950] = far;
    pts[950][0] = 4.75f;

    std::vector<RetrievalRecord> recs;
    for (std::uint32_t i = 0; i < pts.size(); ++i) recs.push_back(bare_record(i, pts[i]));
    const RetrievalIndex idx(std::move(recs), 8, "acceptance");

    std::vector<std::vector<float>> queries;
    queries.push_back(pts[10]);
    queries.push_back(pts[800]);
    queries.push_back(far);
    while (queries.size() < 100) {
        std::vector<float> q(8);
        for (auto &x : q) x = u(rng);
        queries.push_back(std::move(q));
    }

    const auto t0 = Clock::now();
    std::vector<Neighbor> hits;
    for (const auto &q : queries) hits.push_back(nearest_vector(idx, q));
    const double secs = seconds_since(t0);

    std::size_t agree = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto want = oracle::brute_force_nearest(pts, queries[i]);
        if (hits[i].record->record_id == want.id &&
            std::abs(hits[i].distance - static_cast<double>(want.distance)) <= 1e-9)
            ++agree;
    }
    o.check(agree == queries.size(), std::to_string(queries.size() - agree) + " queries disagree with the oracle");
    o.check(hits[0].record->record_id == 10 && hits[1].record->record_id == 20, "duplicate-vector tie not resolved to lowest id");
    o.check(hits[2].record->record_id == 900, "equidistant tie not resolved to lowest id");
    o.check(secs < 5.0, "took " + std::to_string(secs) + " s");
    if (o.pass)
        o.detail = "100/100 queries match the oracle over 1000 records, ties included, " + std::to_string(secs * 1e3) + " ms";
    return o;
}

Outcome euclidean_properties() {
    Outcome o;
    std::mt19937_64 rng(10000);
    std::normal_distribution<float> n(0, 5);
    double worst = 0;
    for (int t = 0; t < 10000; ++t) {
        std::vector<float> x(8), y(8), z(8);
        for (int i = 0; i < 8; ++i) x[i] = n(rng), y[i] = n(rng), z[i] = n(rng);
        o.check(euclidean_distance(x, x) == 0.0, "d(x,x) != 0");
        o.check(std::abs(euclidean_distance(x, y) - euclidean_distance(y, x)) <= 1e-9, "asymmetric");
        const double slack = euclidean_distance(x, z) - euclidean_distance(x, y) - euclidean_distance(y, z);
        worst = std::max(worst, slack);
    }
    o.check(worst <= 1e-9, "triangle inequality violated by " + std::to_string(worst));
    if (o.pass) o.detail = "10000 triples";
    return o;
}

Outcome packer_goldens() {
    Outcome o;
    const auto t = shipped_template();
    for (const auto &f : packer_fixtures()) {
        const auto packed = pack_fixture(t, f);
        o.check(packed.text == read_file(golden(f.name + ".txt")), f.name + " differs from its golden file");
        const auto v = t.parse(packed.text);
        o.check(v.size() == 9, f.name + ": parser returned " + std::to_string(v.size()) + " values");
        o.check(v.count("DEMO_RESPONSE") && v.at("DEMO_RESPONSE") == f.demo.golden_response.text(), f.name + ": DEMO_RESPONSE");
        o.check(v.count("DEMO_DIALOGUE") && v.at("DEMO_DIALOGUE") == f.demo.history_string, f.name + ": DEMO_DIALOGUE");
        o.check(v.count("DEMO_CLIENT_UTT") && v.at("DEMO_CLIENT_UTT") == f.demo.client_utterance.text(), f.name + ": DEMO_CLIENT_UTT");
        o.check(v.count("NEW_DIALOGUE") && v.at("NEW_DIALOGUE") == render_history_string(f.history, true), f.name + ": NEW_DIALOGUE");
        o.check(v.count("NEW_CLIENT_UTT") && v.at("NEW_CLIENT_UTT") == f.history.back().text(), f.name + ": NEW_CLIENT_UTT");
        const auto vocab = packer_vocab();
        o.check(v.count("DEMO_BEHAVIORS") && v.at("DEMO_BEHAVIORS") == join_names(names(vocab, Speaker::client, f.demo.behaviors)),
                f.name + ": DEMO_BEHAVIORS");
        o.check(v.count("DEMO_STRATEGIES") &&
                    v.at("DEMO_STRATEGIES") == join_names(names(vocab, Speaker::counselor, f.demo.strategies)),
                f.name + ": DEMO_STRATEGIES");
        o.check(v.count("NEW_BEHAVIORS") && v.at("NEW_BEHAVIORS") == join_names(names(vocab, Speaker::client, f.behaviors_new)),
                f.name + ": NEW_BEHAVIORS");
        o.check(v.count("NEW_STRATEGIES") && v.at("NEW_STRATEGIES") == v.at("DEMO_STRATEGIES"), f.name + ": NEW_STRATEGIES");
    }
    if (o.pass) o.detail = "3 fixtures byte-identical; 9/9 values recovered from each";
    return o;
}

Outcome strategy_asymmetry() {
    Outcome o;
    TempDir dir;
    const auto ctx = load_e2e_context(write_e2e_workspace(dir.path()));
    const DialogueSession s{{client({sent("我最近很焦虑。", "emotion_expression")})},
                            counselor({sent("你已经做得很好了。", "affirmation"), sent("可以试试运动。", "suggestion")})};
    const auto hit = nearest(*ctx.index, s.history, *ctx.backends.embedder);
    const auto session_strategies = s.golden_response.distinct_labels();
    o.check(hit.record->strategies != session_strategies, "fixture precondition: demo strategies equal the session's");
    const auto pair = pack_training_pair(ctx.tmpl, s, *hit.record, ctx.vocab);
    const auto train = ctx.tmpl.parse(pair.input);
    const auto inf = ctx.tmpl.parse(pack_for_inference(ctx.tmpl, *hit.record, s.history, {"emotion_expression"}, ctx.vocab).text);
    const auto want_train = join_names(names(ctx.vocab, Speaker::counselor, session_strategies));
    const auto want_inf = join_names(names(ctx.vocab, Speaker::counselor, hit.record->strategies));
    o.check(train.at("NEW_STRATEGIES") == want_train, "training pair carries '" + train.at("NEW_STRATEGIES") + "'");
    o.check(inf.at("NEW_STRATEGIES") == want_inf, "inference input carries '" + inf.at("NEW_STRATEGIES") + "'");
    o.check(pair.target == s.golden_response.text(), "training target is not the golden response");
    if (o.pass) o.detail = "training: " + want_train + " / inference: " + want_inf;
    return o;
}

Outcome session_splitting() {
    Outcome o;
    std::mt19937_64 rng(2);
    const auto vocab = small_vocab();
    std::size_t total = 0;
    for (int i = 0; i < 500; ++i) {
        const auto turns = static_cast<std::size_t>(1 + rng() % 14);
        const auto d = random_dialogue(rng, vocab, turns, std::to_string(i));
        const auto sessions = split_sessions(d);
        total += sessions.size();
        o.check(sessions.size() == turns / 2, "dialogue " + std::to_string(i) + ": count");
        for (std::size_t k = 0; k < sessions.size(); ++k) {
            const std::vector<Utterance> prefix(d.utterances.begin(), d.utterances.begin() + static_cast<long>(2 * k + 1));
            o.check(sessions[k].history == prefix, "dialogue " + std::to_string(i) + ": history of session " + std::to_string(k));
            o.check(sessions[k].golden_response == d.utterances[2 * k + 1], "dialogue " + std::to_string(i) + ": golden response");
        }
        if (!sessions.empty()) {
            auto rebuilt = sessions.back().history;
            rebuilt.push_back(sessions.back().golden_response);
            if (turns % 2) rebuilt.push_back(d.utterances.back());
            o.check(rebuilt == d.utterances, "dialogue " + std::to_string(i) + ": reconstruction");
        }
    }
    if (o.pass) o.detail = "500 random dialogues, " + std::to_string(total) + " sessions";
    return o;
}

Outcome classification_examples() {
    Outcome o;
    const DialogueSession s{{client({sent("你好。", "b_desc")}), counselor({sent("你好，请说。", "s_question")}),
                             client({sent("我睡不着。", "b_desc"), sent("很难受！", "b_emotion"), sent("怎么办？", "b_ask")})},
                            counselor({sent("别担心。", "s_comfort"), sent("试试早点睡。", "s_advice")})};
    const auto cl = build_classification_examples(s, Speaker::client);
    const auto co = build_classification_examples(s, Speaker::counselor);
    o.check(cl.size() == 3, "client examples: " + std::to_string(cl.size()));
    o.check(co.size() == 2, "counselor examples: " + std::to_string(co.size()));
    const std::string client_ctx = "[client] 你好。\n[counselor] 你好，请说。[SEP]";
    const std::string counselor_ctx = "[client] 你好。\n[counselor] 你好，请说。\n[client] 我睡不着。很难受！怎么办？[SEP]";
    const std::vector<std::string> cs{"我睡不着。", "很难受！", "怎么办？"};
    for (std::size_t i = 0; i < cl.size() && i < 3; ++i) {
        o.check(count_substr(cl[i].input_text, "[SEP]") == 1, "client example " + std::to_string(i) + ": [SEP] count");
        o.check(cl[i].input_text == client_ctx + cs[i], "client example " + std::to_string(i) + ": '" + cl[i].input_text + "'");
        o.check(cl[i].gold_label == s.history.back().sentences[i].label, "client example label");
    }
    const std::vector<std::string> rs{"别担心。", "试试早点睡。"};
    for (std::size_t i = 0; i < co.size() && i < 2; ++i) {
        o.check(count_substr(co[i].input_text, "[SEP]") == 1, "counselor example [SEP] count");
        o.check(co[i].input_text == counselor_ctx + rs[i], "counselor example " + std::to_string(i) + ": '" + co[i].input_text + "'");
    }
    if (o.pass) o.detail = "3 client examples without the current utterance in context, 2 counselor examples with full history";
    return o;
}

std::vector<DialogueSession> numbered_sessions(std::size_t n) {
    std::vector<DialogueSession> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({{client({sent("问题" + std::to_string(i) + "。", "b_desc")})},
                       counselor({sent("回复" + std::to_string(i) + "。", "s_comfort")})});
    return out;
}

Outcome selection_recall() {
    Outcome o;
    const auto small = build_ranking_dataset(numbered_sessions(200), 9, 42);
    std::size_t hits = 0;
    for (const auto &ex : small) {
        PreferTargetRanker r(ex.candidates[ex.gold_index]);
        hits += recall_at_k({ex}, r, 1) == 1.0;
    }
    const double prefer = static_cast<double>(hits) / static_cast<double>(small.size());
    o.check(prefer == 1.0, "prefer-target R@1/10 = " + std::to_string(prefer));

    const auto big = build_ranking_dataset(numbered_sessions(5000), 9, 43);
    RandomRanker rnd(44);
    const double r1 = recall_at_k(big, rnd, 1);
    o.check(r1 >= 0.08 && r1 <= 0.12, "random R@1/10 = " + std::to_string(r1));
    double prev = 0;
    for (std::size_t k = 1; k <= 10; ++k) {
        const double v = recall_at_k(big, rnd, k);
        o.check(v >= prev, "recall decreases at k=" + std::to_string(k));
        prev = v;
    }
    o.check(prev == 1.0, "R@10/10 != 1");
    if (o.pass) o.detail = "prefer-target R@1/10 = 1.000 on 200; random R@1/10 = " + std::to_string(r1) + " on 5000; monotone";
    return o;
}

Outcome metrics_oracle() {
    Outcome o;
    using metrics::Tokens;
    std::mt19937_64 rng(1010);
    const char *alphabet[] = {"a", "b", "c", "d"};
    auto toks = [&](std::size_t min) {
        Tokens t(min + rng() % 7);
        for (auto &x : t) x = alphabet[rng() % 4];
        return t;
    };
    double worst = 0;
    auto close = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    for (int i = 0; i < 10; ++i) {
        const auto c = toks(1), r = toks(1);
        for (int n = 1; n <= 3; ++n) close(metrics::bleu_n(c, r, n), oracle::bleu(c, r, n));
        close(metrics::rouge_l(c, r), oracle::rouge_l(c, r));
        close(metrics::meteor_simplified(c, r), oracle::meteor(c, r));
        const std::vector<Tokens> corpus{toks(2), toks(2), toks(2)};
        close(metrics::distinct_n(corpus, 1), oracle::distinct(corpus, 1));
        close(metrics::distinct_n(corpus, 2), oracle::distinct(corpus, 2));
    }
    o.check(worst <= 1e-9, "max deviation " + std::to_string(worst));
    for (std::size_t k = 1; k <= 5; ++k) {
        Tokens t;
        for (std::size_t i = 0; i < k; ++i) t.push_back("t" + std::to_string(i));
        for (int n = 1; n <= 3; ++n) o.check(metrics::bleu_n(t, t, n) == 1.0, "BLEU identity");
        o.check(metrics::rouge_l(t, t) == 1.0, "ROUGE-L identity");
        o.check(std::abs(metrics::meteor_simplified(t, t) - (1.0 - 0.5 / std::pow(double(k), 3))) <= 1e-12, "METEOR identity");
    }
    std::ostringstream dev;
    dev << std::scientific << std::setprecision(1) << worst;
    if (o.pass) o.detail = "10 random cases per metric, max deviation " + dev.str();
    return o;
}

json strip_timings(json j) {
    j.erase("timings");
    return j;
}

Outcome e2e_determinism() {
    Outcome o;
    const auto frozen = json::parse(read_file(golden("pipeline_snapshot.json")));
    TempDir dir;
    const auto cfg = write_e2e_workspace(dir.path());
    const auto run1 = snapshot_json(run_e2e_script(load_e2e_context(cfg)));
    const auto run2 = snapshot_json(run_e2e_script(load_e2e_context(cfg)));
    o.check(run1 == frozen, "first run differs from the frozen snapshot");
    o.check(run2.dump() == run1.dump(), "second run differs from the first");

    std::string id;
    {
        ChatService svc(std::make_shared<PipelineContext>(load_e2e_context(cfg)), dir / "data");
        id = svc.create_session();
        for (const auto &m : e2e_client_script()) svc.post_message(id, m);
    }
    ChatService restarted(std::make_shared<PipelineContext>(load_e2e_context(cfg)), dir / "data");
    const auto s = restarted.get_session(id);
    json persisted = json::array();
    for (const auto &m : s.metadata) persisted.push_back(strip_timings(m));
    o.check(persisted == frozen, "persisted transcript differs from the snapshot after restart");
    if (o.pass) o.detail = "3-turn script matches the snapshot across runs and a service restart";
    return o;
}

Outcome export_counts() {
    Outcome o;
    TempDir dir;
    const auto ctx = load_e2e_context(write_e2e_workspace(dir.path()));
    auto corpus_for = [&](std::uint64_t seed, std::size_t &expected) {
        std::mt19937_64 rng(seed);
        std::vector<Dialogue> c;
        expected = 0;
        for (int i = 0; i < 50; ++i) {
            c.push_back(random_dialogue(rng, ctx.vocab, 1 + rng() % 12, "d" + std::to_string(i)));
            expected += c.back().utterances.size() / 2;
        }
        return c;
    };
    std::size_t expected = 0, expected2 = 0;
    std::ostringstream a, b;
    const auto n = export_finetune_dataset(corpus_for(50, expected), *ctx.index, *ctx.backends.embedder, ctx.vocab, ctx.tmpl, a);
    export_finetune_dataset(corpus_for(50, expected2), *ctx.index, *ctx.backends.embedder, ctx.vocab, ctx.tmpl, b);
    std::size_t lines = 0;
    for (char c : a.str()) lines += c == '\n';
    o.check(n == expected && lines == expected, "exported " + std::to_string(lines) + ", expected " + std::to_string(expected));
    o.check(a.str() == b.str(), "re-export is not byte-identical");
    if (o.pass) o.detail = "50 dialogues -> " + std::to_string(n) + " records; re-export byte-identical";
    return o;
}

Outcome service_robustness() {
    Outcome o;
    TempDir dir;
    const auto cfg = write_e2e_workspace(dir.path());
    ChatService svc(std::make_shared<PipelineContext>(load_e2e_context(cfg)), dir / "data");
    LoopbackServer srv;
    install_service_routes(srv.server(), svc);

    constexpr int kSessions = 20, kMessages = 10;
    std::vector<std::string> ids(kSessions);
    std::vector<std::string> errors(kSessions);
    std::vector<std::thread> ts;
    for (int s = 0; s < kSessions; ++s)
        ts.emplace_back([&, s] {
            httplib::Client c("127.0.0.1", srv.port());
            c.set_read_timeout(30, 0);
            auto created = c.Post("/api/sessions", "", "application/json");
            if (!created || created->status != 200) {
                errors[s] = "create failed";
                return;
            }
            ids[s] = json::parse(created->body)["session_id"];
            for (int m = 0; m < kMessages; ++m) {
                const json body{{"text", "会话" + std::to_string(s) + "第" + std::to_string(m) + "句。"}};
                auto r = c.Post("/api/sessions/" + ids[s] + "/messages", body.dump(), "application/json");
                if (!r || r->status != 200) {
                    errors[s] = "message " + std::to_string(m) + " failed";
                    return;
                }
            }
        });
    for (auto &t : ts) t.join();
    for (int s = 0; s < kSessions; ++s) {
        o.check(errors[s].empty(), "session " + std::to_string(s) + ": " + errors[s]);
        if (ids[s].empty()) continue;
        const auto bad = transcript_violations(dir / "data" / "sessions" / (ids[s] + ".jsonl"), ids[s], kMessages);
        o.check(bad.empty(), "session " + std::to_string(s) + ": " + (bad.empty() ? "" : bad.front()));
        const auto sess = svc.get_session(ids[s]);
        for (int m = 0; m < kMessages && sess.utterances.size() == 2 * kMessages; ++m)
            o.check(sess.utterances[2 * m].text() == "会话" + std::to_string(s) + "第" + std::to_string(m) + "句。",
                    "session " + std::to_string(s) + ": message order");
    }

    httplib::Client c("127.0.0.1", srv.port());
    auto unknown = c.Post("/api/sessions/00000000000000000000000000000000/messages", R"({"text":"x"})", "application/json");
    o.check(unknown && unknown->status == 404, "unknown session did not return 404");
    auto empty = c.Post("/api/sessions/" + ids[0] + "/messages", R"({"text":""})", "application/json");
    o.check(!ids[0].empty() && empty && empty->status == 400, "empty text did not return 400");
    if (o.pass) o.detail = "20 sessions x 10 messages, transcripts clean; 404 and 400 as specified";
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"retrieval-exactness", retrieval_exactness},
        {"euclidean-metric-properties", euclidean_properties},
        {"packer-golden-files", packer_goldens},
        {"strategy-asymmetry", strategy_asymmetry},
        {"session-splitting", session_splitting},
        {"classification-examples", classification_examples},
        {"selection-recall", selection_recall},
        {"metrics-oracle-equivalence", metrics_oracle},
        {"end-to-end-determinism", e2e_determinism},
        {"export-counts", export_counts},
        {"service-robustness", service_robustness},
    };
    int failures = 0;
    for (const auto &[name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception &e) {
            o.fail(std::string("exception: ") + e.what());
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
