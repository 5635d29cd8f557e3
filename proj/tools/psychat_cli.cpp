#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "psychat/config.hpp"
#include "psychat/http_backends.hpp"
#include "psychat/http_service.hpp"
#include "psychat/humaneval.hpp"
#include "psychat/json_io.hpp"
#include "psychat/metrics.hpp"
#include "psychat/pipeline.hpp"
#include "psychat/service.hpp"
#include "psychat/text.hpp"

using namespace psychat;
using nlohmann::json;

namespace {

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string &path, const std::string &content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << content;
        if (!out.flush()) throw Error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename " + tmp + " to " + path);
}

std::shared_ptr<const Ranker> make_ranker(const BackendDescriptor &d) {
    d.validate();
    if (d.kind == BackendKind::http) return std::make_shared<HttpRanker>(d);
    return make_mock_ranker(d);
}

std::vector<DialogueSession> all_sessions(const std::vector<Dialogue> &corpus) {
    std::vector<DialogueSession> out;
    for (const auto &d : corpus)
        for (auto &s : split_sessions(d)) out.push_back(std::move(s));
    return out;
}

/// A JSON array of utterances, or plain lines "client: ..." / "counselor: ...".
std::vector<Utterance> read_history(const std::string &path) {
    const auto content = read_file(path);
    if (const auto j = json::parse(content, nullptr, false); !j.is_discarded()) return utterances_from_json(j);
    std::vector<Utterance> out;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::is_blank(line)) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) throw Error("history line without 'speaker:' prefix: " + line);
        const auto speaker = speaker_from_string(line.substr(0, colon));
        auto body = line.substr(colon + 1);
        body.erase(0, body.find_first_not_of(' '));
        out.push_back(make_utterance(speaker, body));
    }
    return out;
}

/// Blocks SIGINT/SIGTERM in every thread and stops `server` when one arrives.
std::thread stop_on_signal(httplib::Server &server) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return std::thread([set, &server] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    });
}

void listen_until_signal(httplib::Server &server, const std::string &addr) {
    const auto [host, port] = parse_address(addr);
    if (!server.bind_to_port(host, port)) throw Error("cannot bind " + addr);
    auto watcher = stop_on_signal(server);
    watcher.detach();
    std::cerr << "listening on " << addr << std::endl;
    server.listen_after_bind();
}

int cmd_pseudo_label(const std::string &in, const std::string &out, const std::string &config) {
    const auto cfg = PipelineConfig::load(config);
    cfg.validate(false);
    const auto vocab = LabelVocabulary::load(cfg.vocab_path);
    const auto tmpl = PromptTemplate::load(cfg.template_path);
    const auto backends = make_backends(cfg, vocab, tmpl);
    const auto corpus = load_corpus(in, vocab);
    const auto labeled = pseudo_label_corpus(corpus, *backends.behavior_classifier, *backends.strategy_classifier, vocab);
    std::ostringstream os;
    write_corpus(os, labeled);
    write_file(out, os.str());
    std::cout << "labeled " << labeled.size() << " dialogues -> " << out << "\n";
    return 0;
}

int cmd_index_build(const std::string &corpus_path, const std::string &out, const std::string &config) {
    const auto cfg = PipelineConfig::load(config);
    cfg.validate(false);
    const auto vocab = LabelVocabulary::load(cfg.vocab_path);
    const auto tmpl = PromptTemplate::load(cfg.template_path);
    const auto backends = make_backends(cfg, vocab, tmpl);
    const auto index = build_index(all_sessions(load_corpus(corpus_path, vocab)), *backends.embedder);
    save_index(index, out);
    std::cout << "indexed " << index.size() << " sessions (dim " << index.dim() << ") -> " << out << "\n";
    return 0;
}

int cmd_index_query(const std::string &idx, const std::string &history_path, const std::string &config) {
    const auto cfg = PipelineConfig::load(config);
    const auto &d = cfg.backend(BackendRole::embedder);
    d.validate();
    std::shared_ptr<const Embedder> embedder;
    if (d.kind == BackendKind::http)
        embedder = std::make_shared<HttpEmbedder>(d);
    else
        embedder = make_mock_embedder(d);
    const auto index = load_index(idx, {embedder->dim(), index_fingerprint(*embedder)});
    const auto hit = nearest(index, read_history(history_path), *embedder);
    std::cout << json{{"record_id", hit.record->record_id},
                      {"distance", hit.distance},
                      {"strategies", hit.record->strategies}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_export(const std::string &corpus_path, const std::string &idx, const std::string &out, int stage,
               const std::string &config) {
    auto cfg = PipelineConfig::load(config);
    cfg.index_path = idx;
    const auto ctx = PipelineContext::from_config(cfg);
    const auto corpus = load_corpus(corpus_path, ctx.vocab);
    std::ostringstream os;
    const auto count = export_finetune_dataset(corpus, *ctx.index, *ctx.backends.embedder, ctx.vocab, ctx.tmpl, os);
    write_file(out, os.str());
    write_file(out + ".meta.json", finetune_metadata(stage, count).dump(2) + "\n");
    std::cout << "exported " << count << " training pairs (stage " << stage << ") -> " << out << "\n";
    return 0;
}

int cmd_eval_ranking(const std::string &corpus_path, const std::string &config, std::size_t k, std::size_t n,
                     std::uint64_t seed, const std::string &report) {
    if (n < 2) throw PreconditionError("--n must be at least 2");
    if (k < 1 || k > n) throw PreconditionError("--k must be in [1, n]");
    const auto cfg = PipelineConfig::load(config);
    const auto vocab = LabelVocabulary::load(cfg.vocab_path);
    const auto ranker = make_ranker(cfg.backend(BackendRole::ranker));
    const auto examples = build_ranking_dataset(all_sessions(load_corpus(corpus_path, vocab)), n - 1, seed);
    const double r = recall_at_k(examples, *ranker, k);
    std::printf("R@%zu/%zu = %.4f\n", k, n, r);
    write_file(report, json{{"metric", "R@" + std::to_string(k) + "/" + std::to_string(n)},
                            {"k", k},
                            {"n", n},
                            {"seed", seed},
                            {"examples", examples.size()},
                            {"recall", r},
                            {"ranker", std::string(to_string(cfg.backend(BackendRole::ranker).kind))}}
                           .dump(2) +
                           "\n");
    return 0;
}

int cmd_eval_generate(const std::string &pairs_path, const std::string &out) {
    std::vector<metrics::TextPair> pairs;
    std::istringstream in(read_file(pairs_path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        try {
            const auto j = json::parse(line);
            pairs.push_back({j.at("candidate").get<std::string>(), j.at("reference").get<std::string>()});
        } catch (const json::exception &e) {
            throw CorpusError(line_no, std::string("pairs file: ") + e.what());
        }
    }
    const auto report = metrics::evaluate(pairs);
    write_file(out, report.to_json().dump(2) + "\n");
    std::printf("pairs=%zu METEOR=%.4f BLEU-1=%.4f BLEU-2=%.4f BLEU-3=%.4f ROUGE-L=%.4f D-1=%.4f D-2=%.4f\n",
                report.pair_count, report.meteor, report.bleu1, report.bleu2, report.bleu3, report.rouge_l,
                report.distinct1, report.distinct2);
    return 0;
}

int cmd_humaneval(const std::string &in, std::uint64_t seed, const std::string &out_blind, const std::string &out_key) {
    const auto bundle = humaneval::build_humaneval_bundle(humaneval::parse_samples(read_file(in)), seed);
    write_file(out_blind, humaneval::blinded_to_jsonl(bundle.blinded));
    write_file(out_key, humaneval::key_to_jsonl(bundle.key));
    std::cout << "bundled " << bundle.blinded.size() << " samples\n";
    return 0;
}

int cmd_serve(const std::string &config, const std::string &addr, const std::string &data_dir,
              const std::string &static_dir) {
    auto ctx = std::make_shared<const PipelineContext>(PipelineContext::from_config(PipelineConfig::load(config)));
    ChatService service(ctx, data_dir);
    httplib::Server server;
    install_service_routes(server, service,
                           static_dir.empty() ? std::nullopt : std::optional<std::string>(static_dir));
    listen_until_signal(server, addr);
    return 0;
}

int cmd_mock_backend(const std::string &config, const std::string &addr) {
    auto cfg = PipelineConfig::load(config);
    for (auto &[role, d] : cfg.backends) d.kind = BackendKind::mock;
    cfg.validate(false);
    const auto vocab = LabelVocabulary::load(cfg.vocab_path);
    const auto tmpl = PromptTemplate::load(cfg.template_path);
    httplib::Server server;
    install_backend_routes(server, make_backends(cfg, vocab, tmpl));
    listen_until_signal(server, addr);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Client-centric counseling dialogue pipeline"};
    app.require_subcommand(1);
    std::function<int()> run;

    std::string in, out, config, corpus, idx, history, pairs, out_blind, out_key, addr, data_dir, static_dir, report;
    int stage = 1;
    std::size_t k = 1, n = 10;
    std::uint64_t seed = 42;

    auto *pl = app.add_subcommand("pseudo-label", "Fill missing sentence labels with the configured classifiers");
    pl->add_option("--in", in, "Input corpus (JSONL)")->required();
    pl->add_option("--out", out, "Output corpus (JSONL)")->required();
    pl->add_option("--config", config, "Pipeline config")->required();
    pl->callback([&] { run = [&] { return cmd_pseudo_label(in, out, config); }; });

    auto *index = app.add_subcommand("index", "Build or query the retrieval index");
    index->require_subcommand(1);
    auto *ib = index->add_subcommand("build", "Embed every session of a labeled corpus");
    ib->add_option("--corpus", corpus, "Labeled corpus (JSONL)")->required();
    ib->add_option("--out", out, "Index file")->required();
    ib->add_option("--config", config, "Pipeline config")->required();
    ib->callback([&] { run = [&] { return cmd_index_build(corpus, out, config); }; });
    auto *iq = index->add_subcommand("query", "Print the nearest record for a history");
    iq->add_option("--idx", idx, "Index file")->required();
    iq->add_option("--history", history, "History: JSON utterance array or 'speaker: text' lines")->required();
    iq->add_option("--config", config, "Pipeline config (selects the embedder)")->required();
    iq->callback([&] { run = [&] { return cmd_index_query(idx, history, config); }; });

    auto *ex = app.add_subcommand("export-finetune", "Write packed {input, target} training pairs");
    ex->add_option("--corpus", corpus, "Labeled corpus (JSONL)")->required();
    ex->add_option("--index", idx, "Retrieval index")->required();
    ex->add_option("--out", out, "Output JSONL")->required();
    ex->add_option("--stage", stage, "Fine-tuning stage")->required()->check(CLI::IsMember({1, 2}));
    ex->add_option("--config", config, "Pipeline config")->required();
    ex->callback([&] { run = [&] { return cmd_export(corpus, idx, out, stage, config); }; });

    auto *ev = app.add_subcommand("eval", "Evaluation");
    ev->require_subcommand(1);
    auto *er = ev->add_subcommand("ranking", "R@k/N of the configured ranker");
    er->add_option("--corpus", corpus, "Test corpus (JSONL)")->required();
    er->add_option("--config", config, "Pipeline config")->required();
    er->add_option("--k", k, "k")->capture_default_str();
    er->add_option("--n", n, "Candidates per example")->capture_default_str();
    er->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    er->add_option("--report", report, "JSON report path")->default_val("ranking_report.json");
    er->callback([&] { run = [&] { return cmd_eval_ranking(corpus, config, k, n, seed, report); }; });
    auto *eg = ev->add_subcommand("generate", "METEOR, BLEU-1/2/3, ROUGE-L and Distinct-1/2");
    eg->add_option("--pairs", pairs, "JSONL of {candidate, reference}")->required();
    eg->add_option("--out", out, "JSON report path")->required();
    eg->callback([&] { run = [&] { return cmd_eval_generate(pairs, out); }; });

    auto *he = app.add_subcommand("humaneval", "Human evaluation");
    he->require_subcommand(1);
    auto *hb = he->add_subcommand("bundle", "Shuffle responses into a blinded file plus key");
    hb->add_option("--in", in, "Samples JSONL")->required();
    hb->add_option("--seed", seed, "Shuffle seed")->required();
    hb->add_option("--out-blind", out_blind, "Blinded output")->required();
    hb->add_option("--out-key", out_key, "Key output")->required();
    hb->callback([&] { run = [&] { return cmd_humaneval(in, seed, out_blind, out_key); }; });

    auto *sv = app.add_subcommand("serve", "Run the chat HTTP service");
    sv->add_option("--config", config, "Pipeline config")->required();
    sv->add_option("--addr", addr, "host:port")->default_val("127.0.0.1:8080");
    sv->add_option("--data-dir", data_dir, "Session storage directory")->required();
    sv->add_option("--static", static_dir, "Directory served under /");
    sv->callback([&] { run = [&] { return cmd_serve(config, addr, data_dir, static_dir); }; });

    auto *mb = app.add_subcommand("mock-backend", "Serve mock backends over the HTTP backend protocol");
    mb->add_option("--config", config, "Pipeline config (backend seeds and variants)")->required();
    mb->add_option("--addr", addr, "host:port")->default_val("127.0.0.1:9000");
    mb->callback([&] { run = [&] { return cmd_mock_backend(config, addr); }; });

    CLI11_PARSE(app, argc, argv);
    try {
        return run();
    } catch (const CorpusError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
