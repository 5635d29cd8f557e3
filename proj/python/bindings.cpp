#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "psychat/json_io.hpp"
#include "psychat/metrics.hpp"
#include "psychat/pipeline.hpp"

namespace py = pybind11;
using namespace psychat;
using nlohmann::json;

namespace {

using SpeakerText = std::pair<std::string, std::string>;

std::vector<Utterance> to_history(const std::vector<SpeakerText> &turns) {
    std::vector<Utterance> out;
    for (const auto &[speaker, text] : turns) out.push_back(make_utterance(speaker_from_string(speaker), text));
    return out;
}

std::vector<float> to_floats(const std::vector<double> &v) { return {v.begin(), v.end()}; }

} // namespace

PYBIND11_MODULE(_psychat, m) {
    m.doc() = "Native core of the psychat dialogue pipeline";

    py::register_exception<Error>(m, "PsychatError", PyExc_RuntimeError);

    m.def("segment_sentences", [](const std::string &t) { return segment_sentences(t); });
    m.def(
        "render_history",
        [](const std::vector<SpeakerText> &turns, bool speaker_tokens) {
            return render_history_string(to_history(turns), speaker_tokens);
        },
        py::arg("turns"), py::arg("speaker_tokens") = true);

    m.def("tokenize", [](const std::string &t) { return metrics::tokenize(t); });
    m.def("bleu", &metrics::bleu_n, py::arg("candidate"), py::arg("reference"), py::arg("n"));
    m.def("rouge_l", &metrics::rouge_l);
    m.def("lcs_length", &metrics::lcs_length);
    m.def("distinct", &metrics::distinct_n, py::arg("corpus"), py::arg("n"));
    m.def("meteor", &metrics::meteor_simplified);
    m.def("evaluate_json", [](const std::vector<std::pair<std::string, std::string>> &pairs) {
        std::vector<metrics::TextPair> tp;
        for (const auto &[c, r] : pairs) tp.push_back({c, r});
        return metrics::evaluate(tp).to_json().dump();
    });

    m.def("parse_corpus_json", [](const std::string &corpus, const std::string &vocab_json) {
        const auto vocab = LabelVocabulary::from_json_text(vocab_json);
        std::ostringstream os;
        write_corpus(os, parse_corpus_text(corpus, vocab));
        return os.str();
    });
    m.def("split_sessions_json", [](const std::string &dialogue_line, const std::string &vocab_json) {
        const auto vocab = LabelVocabulary::from_json_text(vocab_json);
        json out = json::array();
        for (const auto &d : parse_corpus_text(dialogue_line, vocab))
            for (const auto &s : split_sessions(d))
                out.push_back({{"history", utterances_to_json(s.history)},
                               {"golden_response", utterance_to_json(s.golden_response)}});
        return out.dump();
    });

    py::class_<RetrievalIndex, std::shared_ptr<RetrievalIndex>>(m, "Index")
        .def_static("load", [](const std::string &path) { return std::make_shared<RetrievalIndex>(load_index(path)); })
        .def_property_readonly("size", &RetrievalIndex::size)
        .def_property_readonly("dim", &RetrievalIndex::dim)
        .def_property_readonly("fingerprint", &RetrievalIndex::fingerprint)
        .def("nearest_vector", [](const RetrievalIndex &idx, const std::vector<double> &q) {
            const auto v = to_floats(q);
            const auto hit = nearest_vector(idx, v);
            return std::make_pair(hit.record->record_id, hit.distance);
        });

    py::class_<PipelineContext, std::shared_ptr<PipelineContext>>(m, "Pipeline")
        .def(py::init([](const std::string &config) {
                 return std::make_shared<PipelineContext>(PipelineContext::from_config(PipelineConfig::load(config)));
             }),
             py::arg("config"))
        .def(
            "respond_json",
            [](const PipelineContext &ctx, const std::vector<SpeakerText> &turns, bool timings) {
                const auto history = to_history(turns);
                py::gil_scoped_release release;
                return to_json(respond(history, ctx), timings).dump();
            },
            py::arg("history"), py::arg("timings") = false);
}
