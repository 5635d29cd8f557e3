#include <gtest/gtest.h>

#include <random>

#include "psychat/recognition.hpp"
#include "psychat/text.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace psychat;
using namespace psychat::testing;

namespace {

using Segs = std::vector<std::string>;

std::string concat(const Segs &s) {
    std::string out;
    for (const auto &x : s) out += x;
    return out;
}

// Records every classifier input so context construction can be checked.
class RecordingClassifier final : public Classifier {
  public:
    explicit RecordingClassifier(LabelVocabulary v) : inner_(std::move(v), 0) {}
    Classification classify(std::string_view input, Speaker role) const override {
        inputs.emplace_back(input);
        return inner_.classify(input, role);
    }
    mutable std::vector<std::string> inputs;

  private:
    MockClassifier inner_;
};

} // namespace

TEST(Segmentation, Examples) {
    EXPECT_EQ(segment_sentences("今天很累。想休息。"), (Segs{"今天很累。", "想休息。"}));
    EXPECT_EQ(segment_sentences("好的"), (Segs{"好的"}));
    // Whitespace after a terminal mark stays with the preceding sentence.
    EXPECT_EQ(segment_sentences("Why? I'm tired!"), (Segs{"Why? ", "I'm tired!"}));
}

TEST(Segmentation, ClosingQuotesAndRunsOfMarks) {
    EXPECT_EQ(segment_sentences("他说：“我不去。”然后走了。"), (Segs{"他说：“我不去。”", "然后走了。"}));
    EXPECT_EQ(segment_sentences("真的吗？！那太好了……嗯"), (Segs{"真的吗？！", "那太好了……", "嗯"}));
    EXPECT_EQ(segment_sentences("好。　"), (Segs{"好。　"}));
    EXPECT_EQ(segment_sentences("  "), (Segs{"  "}));
}

TEST(Segmentation, LosslessAndNonEmptyOnRandomInputs) {
    const char *alphabet[] = {"我", "a", " ", "。", "！", "？", "?", "!", "…", "”", "」", "　", "x", "好"};
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s;
        const auto n = 1 + rng() % 20;
        for (std::size_t i = 0; i < n; ++i) s += alphabet[rng() % std::size(alphabet)];
        const auto segs = segment_sentences(s);
        ASSERT_EQ(concat(segs), s) << s;
        for (const auto &seg : segs) ASSERT_FALSE(seg.empty());
        // Only the first segment may be whitespace-only (when the whole input is).
        for (std::size_t i = 0; i < segs.size(); ++i)
            if (segs.size() > 1) ASSERT_FALSE(text::is_blank(segs[i])) << s;
    }
}

TEST(MakeUtterance, SegmentsAndRejectsBadText) {
    const auto u = make_utterance(Speaker::client, "你好。我很累");
    EXPECT_EQ(u.sentences.size(), 2u);
    EXPECT_EQ(u.text(), "你好。我很累");
    EXPECT_THROW(make_utterance(Speaker::client, ""), PreconditionError);
    EXPECT_THROW(make_utterance(Speaker::client, "a\nb"), PreconditionError);
}

TEST(RecognizeBehaviors, OneAnnotationPerSentenceOfFinalClientUtterance) {
    const auto vocab = small_vocab();
    RecordingClassifier cls(vocab);
    const std::vector<Utterance> h{client({sent("你好。")}), counselor({sent("嗯。")}),
                                   client({sent("我很累。"), sent("睡不着。")})};
    const auto ann = recognize_behaviors(h, cls, vocab);
    ASSERT_EQ(ann.size(), 2u);
    EXPECT_EQ(ann[0].sentence_index, 0u);
    EXPECT_EQ(ann[1].sentence_index, 1u);
    // Context excludes the final client utterance.
    ASSERT_EQ(cls.inputs.size(), 2u);
    EXPECT_EQ(cls.inputs[0], "[client] 你好。\n[counselor] 嗯。[SEP]我很累。");
    EXPECT_EQ(cls.inputs[1], "[client] 你好。\n[counselor] 嗯。[SEP]睡不着。");
}

TEST(RecognizeBehaviors, MockLabelFollowsByteSumRule) {
    const auto vocab = small_vocab();
    MockClassifier cls(vocab, 0);
    // Single-turn history: input is "[SEP]" + sentence.
    for (const std::string s : {"a", "我很累。", "hello world", "?"}) {
        const auto ann = recognize_behaviors({client({sent(s)})}, cls, vocab);
        ASSERT_EQ(ann.size(), 1u);
        const auto idx = oracle::byte_sum("[SEP]" + s) % 3;
        EXPECT_EQ(ann[0].label, vocab.behavior_labels()[idx].id) << s;
    }
}

TEST(RecognizeBehaviors, RequiresClientLast) {
    const auto vocab = small_vocab();
    MockClassifier cls(vocab, 0);
    EXPECT_THROW(recognize_behaviors({client({sent("a")}), counselor({sent("b")})}, cls, vocab), PreconditionError);
    EXPECT_THROW(recognize_behaviors({}, cls, vocab), PreconditionError);
}

TEST(RecognizeStrategies, UsesFullHistoryAndIsDeterministic) {
    const auto vocab = small_vocab();
    RecordingClassifier cls(vocab);
    const std::vector<Utterance> h{client({sent("我很累。")})};
    const auto resp = counselor({sent("辛苦了。"), sent("说说看？"), sent("我在听。")});
    const auto a1 = recognize_strategies(h, resp, cls, vocab);
    const auto a2 = recognize_strategies(h, resp, cls, vocab);
    ASSERT_EQ(a1.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(a1[i].sentence_index, i);
        EXPECT_EQ(a1[i].label, a2[i].label);
        EXPECT_EQ(a1[i].scores, a2[i].scores);
        EXPECT_TRUE(vocab.contains(Speaker::counselor, a1[i].label));
    }
    EXPECT_EQ(cls.inputs[0], "[client] 我很累。[SEP]辛苦了。");
    EXPECT_THROW(recognize_strategies(h, client({sent("x")}), cls, vocab), PreconditionError);
}

TEST(AggregateLabels, DedupKeepsFirstOccurrence) {
    std::vector<BehaviorAnnotation> a{{0, "x", {}}, {1, "y", {}}, {2, "x", {}}, {3, "z", {}}};
    EXPECT_EQ(aggregate_labels(a), (std::vector<LabelId>{"x", "y", "z"}));
}

TEST(PseudoLabel, FillsOnlyMissingLabelsAndIsIdempotent) {
    const auto vocab = small_vocab();
    MockClassifier cls(vocab, 0);
    Dialogue d{"m",
               {client({sent("我很累。", "b_ask"), sent("睡不着。")}), counselor({sent("辛苦了。")}),
                client({sent("谢谢。")}), counselor({sent("不客气。", "s_question")})}};
    const auto once = pseudo_label_corpus({d}, cls, cls, vocab);
    ASSERT_EQ(once.size(), 1u);
    const auto &u = once[0].utterances;
    EXPECT_EQ(u[0].sentences[0].label, "b_ask");
    EXPECT_EQ(u[3].sentences[0].label, "s_question");
    for (const auto &utt : u) EXPECT_TRUE(utt.fully_labeled());
    // Second sentence of the first client utterance: context is empty.
    EXPECT_EQ(u[0].sentences[1].label, vocab.behavior_labels()[oracle::byte_sum("[SEP]睡不着。") % 3].id);
    // Counselor sentence: context is everything before it.
    EXPECT_EQ(u[1].sentences[0].label,
              vocab.strategy_labels()[oracle::byte_sum("[client] 我很累。睡不着。[SEP]辛苦了。") % 3].id);
    // Texts and structure unchanged.
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(u[i].text(), d.utterances[i].text());
    EXPECT_EQ(pseudo_label_corpus(once, cls, cls, vocab), once);
}

TEST(PseudoLabel, FullyLabeledCorpusUnchanged) {
    std::mt19937_64 rng(3);
    const auto vocab = small_vocab();
    std::vector<Dialogue> ds;
    for (int i = 0; i < 5; ++i) ds.push_back(random_dialogue(rng, vocab, 4, std::to_string(i)));
    MockClassifier cls(vocab, 0);
    EXPECT_EQ(pseudo_label_corpus(ds, cls, cls, vocab), ds);
}

TEST(PseudoLabel, OutOfVocabularyClassifierOutputRejected) {
    class Bad final : public Classifier {
      public:
        Classification classify(std::string_view, Speaker) const override { return {"nope", {1.0, 0.0, 0.0}}; }
    };
    const auto vocab = small_vocab();
    Dialogue d{"b", {client({sent("a")}), counselor({sent("b")})}};
    EXPECT_THROW(pseudo_label_corpus({d}, Bad{}, Bad{}, vocab), BackendError);
}
