#include "psychat/pipeline.hpp"

#include <chrono>
#include <ostream>

#include "psychat/text.hpp"

namespace psychat {

using nlohmann::json;

namespace {

class StageClock {
  public:
    explicit StageClock(std::vector<StageTiming> &sink) : sink_(sink) {}

    template <class F>
    auto run(std::string_view stage, F &&f) {
        const auto start = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                record(stage, start);
            } else {
                auto out = f();
                record(stage, start);
                return out;
            }
        } catch (const PipelineError &) {
            throw;
        } catch (const std::exception &e) {
            throw PipelineError(std::string(stage), e.what());
        }
    }

  private:
    void record(std::string_view stage, std::chrono::steady_clock::time_point start) {
        const auto d = std::chrono::steady_clock::now() - start;
        sink_.push_back({std::string(stage), std::chrono::duration<double, std::milli>(d).count()});
    }

    std::vector<StageTiming> &sink_;
};

} // namespace

json to_json(const PipelineResult &r, bool with_timings) {
    json behaviors = json::array();
    for (const auto &b : r.behaviors)
        behaviors.push_back({{"sentence_index", b.sentence_index}, {"label", b.label}, {"scores", b.scores}});
    const auto &p = r.packed_input;
    json j = {
        {"behaviors", std::move(behaviors)},
        {"demonstration_id", r.demonstration_id},
        {"retrieval_distance", r.retrieval_distance},
        {"strategies", r.strategies},
        {"packed_input",
         {{"text", p.text},
          {"demonstration_id", p.demonstration_id},
          {"behaviors_new", p.behaviors_new},
          {"strategies_new", p.strategies_new},
          {"behaviors_demo", p.behaviors_demo},
          {"strategies_demo", p.strategies_demo}}},
        {"candidates",
         {{"candidates", r.candidates.candidates},
          {"scores", r.candidates.scores},
          {"selected_index", r.candidates.selected_index}}},
        {"response_text", r.response_text},
    };
    if (with_timings) {
        json t = json::array();
        for (const auto &s : r.timings) t.push_back({{"stage", s.stage}, {"ms", s.ms}});
        j["timings"] = std::move(t);
    }
    return j;
}

PipelineContext PipelineContext::from_config(const PipelineConfig &cfg) {
    cfg.validate(true);
    auto vocab = LabelVocabulary::load(cfg.vocab_path);
    auto tmpl = PromptTemplate::load(cfg.template_path);
    auto backends = make_backends(cfg, vocab, tmpl);
    IndexExpectations expect{backends.embedder->dim(), index_fingerprint(*backends.embedder)};
    auto index = std::make_shared<const RetrievalIndex>(load_index(cfg.index_path, expect));
    if (index->empty()) throw ConfigError("retrieval index " + cfg.index_path + " is empty");
    return {std::move(vocab), std::move(tmpl), std::move(index), std::move(backends), cfg.generation};
}

PipelineResult respond(const std::vector<Utterance> &history, const PipelineContext &ctx) {
    if (history.empty()) throw PreconditionError("respond: empty history");
    if (history.back().speaker != Speaker::client)
        throw PreconditionError("respond: history must end with a client utterance");
    if (!ctx.index || ctx.index->empty()) throw PreconditionError("respond: empty retrieval index");

    PipelineResult r;
    StageClock clock(r.timings);

    r.behaviors = clock.run(kStageBehaviorRecognition, [&] {
        return recognize_behaviors(history, *ctx.backends.behavior_classifier, ctx.vocab);
    });

    const RetrievalRecord *demo = clock.run(kStageStrategySelection, [&] {
        const auto hit = nearest(*ctx.index, history, *ctx.backends.embedder);
        r.demonstration_id = hit.record->record_id;
        r.retrieval_distance = hit.distance;
        r.strategies = hit.record->strategies;
        return hit.record;
    });

    r.packed_input = clock.run(kStageInputPacking, [&] {
        auto packed = pack_for_inference(ctx.tmpl, *demo, history, aggregate_labels(r.behaviors), ctx.vocab);
        const auto length = text::codepoint_count(packed.text);
        if (length > static_cast<std::size_t>(ctx.generation.max_sequence_length))
            throw PreconditionError("packed input has " + std::to_string(length) + " characters, limit is " +
                                    std::to_string(ctx.generation.max_sequence_length));
        return packed;
    });

    const auto candidates = clock.run(kStageResponseGeneration, [&] {
        auto out = ctx.backends.generator->generate(r.packed_input.text, ctx.generation);
        const auto want = static_cast<std::size_t>(ctx.generation.num_candidates);
        if (out.size() != want)
            throw BackendError("generator returned " + std::to_string(out.size()) + " of " + std::to_string(want) +
                               " requested candidates");
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i].empty()) throw BackendError("generator returned an empty candidate at position " + std::to_string(i));
        return out;
    });

    r.candidates = clock.run(kStageResponseSelection, [&] {
        return select_response(render_history_string(history, true), candidates, *ctx.backends.ranker);
    });
    r.response_text = r.candidates.selected();
    return r;
}

std::size_t export_finetune_dataset(const std::vector<Dialogue> &corpus, const RetrievalIndex &index,
                                    const Embedder &embedder, const LabelVocabulary &vocab,
                                    const PromptTemplate &tmpl, std::ostream &out) {
    if (index.empty()) throw PreconditionError("export: empty retrieval index");
    std::size_t count = 0;
    for (const auto &d : corpus) {
        for (const auto &session : split_sessions(d)) {
            if (!session.fully_labeled())
                throw PreconditionError("export: dialogue '" + d.id + "' has unlabeled sentences; pseudo-label it first");
            const auto hit = nearest(index, session.history, embedder);
            const auto pair = pack_training_pair(tmpl, session, *hit.record, vocab);
            out << json{{"input", pair.input}, {"target", pair.target}}.dump() << '\n';
            ++count;
        }
    }
    return count;
}

json finetune_metadata(int stage, std::size_t record_count) {
    return {
        {"stage", stage},
        {"records", record_count},
        {"base_model", "THUDM/chatglm2-6b"},
        {"max_sequence_length", 8192},
        {"peft",
         {{"method", "lora"},
          {"target_modules", "all-linear"},
          {"rank", 16},
          {"alpha", 64},
          {"dropout", 0.1}}},
        {"training", {{"epochs", 2}, {"learning_rate", 1e-4}, {"batch_size", 1}, {"seed", 1234}}},
    };
}

} // namespace psychat
