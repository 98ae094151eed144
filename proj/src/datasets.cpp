#include "vlc/datasets.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace vlc {

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

std::optional<Split> split_from_name(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    return std::nullopt;
}

Answer reference_answer(const Concepts& c) {
    switch (task_of(c)) {
        case Task::MNAdd: {
            const auto& mc = std::get<MnAddConcepts>(c);
            return {Task::MNAdd, mc.a + mc.b};
        }
        case Task::MNLogic: {
            const auto& mc = std::get<MnLogicConcepts>(c);
            std::uint64_t acc = 0;
            for (auto b : mc.bits) acc ^= b;
            return {Task::MNLogic, acc};
        }
        case Task::KandLogic: {
            const auto& kc = std::get<KandConcepts>(c);
            for (std::size_t i = 0; i < kc.objects.size(); ++i) {
                for (std::size_t j = i + 1; j < kc.objects.size(); ++j) {
                    if (kc.objects[i].shape == kc.objects[j].shape &&
                        kc.objects[i].color != kc.objects[j].color) {
                        return {Task::KandLogic, 0};
                    }
                }
            }
            return {Task::KandLogic, 1};
        }
    }
    throw ConfigError("unknown task in concepts");
}

std::string default_dataset_name(Task task, std::uint32_t m) {
    std::string base;
    switch (task) {
        case Task::MNAdd: base = "MNAdd"; break;
        case Task::MNLogic: base = "MNLogic"; break;
        case Task::KandLogic: base = "KandLogic"; break;
    }
    auto suffix = task == Task::KandLogic ? "obj" : "dgt";
    return base + "-" + std::to_string(m) + suffix;
}

namespace {

void validate_config(const DatasetConfig& cfg) {
    switch (cfg.task) {
        case Task::MNAdd:
            if (cfg.m < 1 || cfg.m > 19) {
                throw ConfigError("mnadd digit count must be in [1, 19]");
            }
            break;
        case Task::MNLogic:
            if (cfg.m < 2 || cfg.m > 64) {
                throw ConfigError("mnlogic digit count must be in [2, 64]");
            }
            break;
        case Task::KandLogic:
            if (cfg.m < 2 || cfg.m > 16) {
                throw ConfigError("kandlogic object count must be in [2, 16]");
            }
            break;
    }
}

Concepts sample_concepts(Task task, std::uint32_t m, std::mt19937_64& rng) {
    switch (task) {
        case Task::MNAdd: {
            std::uniform_int_distribution<int> digit(0, 9);
            auto number = [&] {
                std::uint64_t v = 0, scale = 1;
                for (std::uint32_t i = 0; i < m; ++i) {
                    v += static_cast<std::uint64_t>(digit(rng)) * scale;
                    scale *= 10;
                }
                return v;
            };
            auto a = number();
            auto b = number();
            return MnAddConcepts{a, b};
        }
        case Task::MNLogic: {
            MnLogicConcepts c;
            std::uniform_int_distribution<int> bit(0, 1);
            for (std::uint32_t i = 0; i < m; ++i) {
                c.bits.push_back(static_cast<std::uint8_t>(bit(rng)));
            }
            return c;
        }
        case Task::KandLogic: {
            KandConcepts c;
            std::uniform_int_distribution<int> shape(0, kShapeCount - 1);
            std::uniform_int_distribution<int> color(0, kColorCount - 1);
            for (std::uint32_t i = 0; i < m; ++i) {
                auto s = static_cast<Shape>(shape(rng));
                auto k = static_cast<Color>(color(rng));
                c.objects.push_back({s, k});
            }
            return c;
        }
    }
    throw ConfigError("unknown task");
}

}  // namespace

Dataset generate(const DatasetConfig& cfg0) {
    validate_config(cfg0);
    DatasetConfig cfg = cfg0;
    if (cfg.name.empty()) cfg.name = default_dataset_name(cfg.task, cfg.m);

    Dataset d;
    d.config = cfg;
    d.samples.reserve(std::size_t(cfg.n_train) + cfg.n_test + cfg.n_val);
    std::mt19937_64 rng(cfg.seed);
    std::uint64_t id = 0;
    auto emit = [&](Split split, std::uint32_t count) {
        for (std::uint32_t i = 0; i < count; ++i) {
            Sample s;
            s.id = id++;
            s.split = split;
            s.concepts = sample_concepts(cfg.task, cfg.m, rng);
            s.label = reference_answer(s.concepts);
            d.samples.push_back(std::move(s));
        }
    };
    emit(Split::Train, cfg.n_train);
    emit(Split::Test, cfg.n_test);
    emit(Split::Val, cfg.n_val);
    return d;
}

// ------------------------------------------------------------------- JSONL

namespace {

nlohmann::ordered_json concepts_to_json(const Concepts& c) {
    switch (task_of(c)) {
        case Task::MNAdd: {
            const auto& mc = std::get<MnAddConcepts>(c);
            return {{"a", mc.a}, {"b", mc.b}};
        }
        case Task::MNLogic: {
            const auto& mc = std::get<MnLogicConcepts>(c);
            auto bits = nlohmann::ordered_json::array();
            for (auto b : mc.bits) bits.push_back(int(b));
            return {{"bits", std::move(bits)}};
        }
        case Task::KandLogic: {
            const auto& kc = std::get<KandConcepts>(c);
            auto objs = nlohmann::ordered_json::array();
            for (const auto& o : kc.objects) {
                objs.push_back({std::string(shape_name(o.shape)),
                                std::string(color_name(o.color))});
            }
            return {{"objects", std::move(objs)}};
        }
    }
    return {};
}

Concepts concepts_from_json(Task task, const nlohmann::json& j, std::size_t line) {
    try {
        switch (task) {
            case Task::MNAdd:
                return MnAddConcepts{j.at("a").get<std::uint64_t>(),
                                     j.at("b").get<std::uint64_t>()};
            case Task::MNLogic: {
                MnLogicConcepts c;
                for (const auto& b : j.at("bits")) {
                    auto v = b.get<int>();
                    if (v != 0 && v != 1) throw SchemaError(line, "bit outside {0,1}");
                    c.bits.push_back(static_cast<std::uint8_t>(v));
                }
                return c;
            }
            case Task::KandLogic: {
                KandConcepts c;
                for (const auto& o : j.at("objects")) {
                    if (!o.is_array() || o.size() != 2) {
                        throw SchemaError(line, "object must be a [shape, color] pair");
                    }
                    auto s = shape_from_name(o[0].get<std::string>());
                    auto k = color_from_name(o[1].get<std::string>());
                    if (!s || !k) throw SchemaError(line, "unknown shape or color");
                    c.objects.push_back({*s, *k});
                }
                return c;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(line, std::string("bad concepts payload: ") + e.what());
    }
    throw SchemaError(line, "unknown task");
}

nlohmann::ordered_json label_to_json(const Answer& a) {
    if (a.task == Task::KandLogic) return a.value != 0;
    return a.value;
}

Answer label_from_json(Task task, const nlohmann::json& j, std::size_t line) {
    try {
        if (task == Task::KandLogic) {
            return {task, j.get<bool>() ? 1u : 0u};
        }
        return {task, j.get<std::uint64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(line, std::string("bad label: ") + e.what());
    }
}

}  // namespace

std::string dataset_to_jsonl(const Dataset& d) {
    std::ostringstream os;
    nlohmann::ordered_json header{{"kind", "dataset"},
                                  {"task", std::string(task_name(d.config.task))},
                                  {"m", d.config.m},
                                  {"seed", d.config.seed},
                                  {"version", 1}};
    os << header.dump() << "\n";
    for (const auto& s : d.samples) {
        nlohmann::ordered_json rec{{"id", s.id},
                                   {"split", std::string(split_name(s.split))},
                                   {"concepts", concepts_to_json(s.concepts)},
                                   {"label", label_to_json(s.label)}};
        os << rec.dump() << "\n";
    }
    return os.str();
}

Dataset dataset_from_jsonl(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(is, line)) throw SchemaError(1, "missing header");
    ++line_no;
    Dataset d;
    try {
        auto header = nlohmann::json::parse(line);
        if (header.at("kind") != "dataset" || header.at("version") != 1) {
            throw SchemaError(1, "not a version-1 dataset header");
        }
        auto task = task_from_name(header.at("task").get<std::string>());
        if (!task) throw SchemaError(1, "unknown task");
        d.config.task = *task;
        d.config.m = header.at("m").get<std::uint32_t>();
        d.config.seed = header.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(1, std::string("bad header: ") + e.what());
    }
    d.config.name = default_dataset_name(d.config.task, d.config.m);
    d.config.n_train = d.config.n_test = d.config.n_val = 0;

    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(line_no, std::string("bad record: ") + e.what());
        }
        Sample s;
        try {
            s.id = rec.at("id").get<std::uint64_t>();
            auto split = split_from_name(rec.at("split").get<std::string>());
            if (!split) throw SchemaError(line_no, "unknown split tag");
            s.split = *split;
            s.concepts = concepts_from_json(d.config.task, rec.at("concepts"), line_no);
            s.label = label_from_json(d.config.task, rec.at("label"), line_no);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(line_no, std::string("bad record: ") + e.what());
        }
        if (s.label != reference_answer(s.concepts)) {
            throw SchemaError(line_no, "label does not match the reasoning function");
        }
        switch (s.split) {
            case Split::Train: ++d.config.n_train; break;
            case Split::Test: ++d.config.n_test; break;
            case Split::Val: ++d.config.n_val; break;
        }
        d.samples.push_back(std::move(s));
    }
    return d;
}

void save_jsonl(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << dataset_to_jsonl(d);
    if (!out) throw IoError("write failed: " + path);
}

Dataset load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return dataset_from_jsonl(buf.str());
}

std::vector<DatasetConfig> shift_suite(Task task, std::uint64_t seed) {
    std::vector<DatasetConfig> out;
    for (std::uint32_t m : {3u, 5u, 7u}) {
        DatasetConfig cfg;
        cfg.task = task;
        cfg.m = m;
        cfg.seed = seed;
        cfg.name = default_dataset_name(task, m);
        out.push_back(std::move(cfg));
    }
    return out;
}

}  // namespace vlc
