#include "vlc/rules.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace vlc {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::string_view task_name(Task t) {
    switch (t) {
        case Task::MNAdd: return "mnadd";
        case Task::MNLogic: return "mnlogic";
        case Task::KandLogic: return "kandlogic";
    }
    return "?";
}

std::optional<Task> task_from_name(std::string_view name) {
    auto n = lower(name);
    if (n == "mnadd") return Task::MNAdd;
    if (n == "mnlogic") return Task::MNLogic;
    if (n == "kandlogic") return Task::KandLogic;
    return std::nullopt;
}

std::string_view shape_name(Shape s) {
    switch (s) {
        case Shape::Circle: return "circle";
        case Shape::Square: return "square";
        case Shape::Triangle: return "triangle";
    }
    return "?";
}

std::string_view color_name(Color c) {
    switch (c) {
        case Color::Red: return "red";
        case Color::Yellow: return "yellow";
        case Color::Blue: return "blue";
    }
    return "?";
}

std::optional<Shape> shape_from_name(std::string_view name) {
    auto n = lower(name);
    if (n == "circle") return Shape::Circle;
    if (n == "square") return Shape::Square;
    if (n == "triangle") return Shape::Triangle;
    return std::nullopt;
}

std::optional<Color> color_from_name(std::string_view name) {
    auto n = lower(name);
    if (n == "red") return Color::Red;
    if (n == "yellow") return Color::Yellow;
    if (n == "blue") return Color::Blue;
    return std::nullopt;
}

Task task_of(const Concepts& c) {
    if (std::holds_alternative<MnAddConcepts>(c)) return Task::MNAdd;
    if (std::holds_alternative<MnLogicConcepts>(c)) return Task::MNLogic;
    return Task::KandLogic;
}

// ---------------------------------------------------------------- builders

namespace {

VTree make_vtree(const std::vector<std::string>& names, const VtreeSpec& spec) {
    switch (spec.kind) {
        case VtreeSpec::Kind::Balanced: return VTree::balanced(names);
        case VtreeSpec::Kind::Random: return VTree::random(names, spec.seed);
        case VtreeSpec::Kind::RightLinear: break;
    }
    return VTree::right_linear(names);
}

}  // namespace

RuleBundle build_mnadd(std::uint32_t bits, const VtreeSpec& vtree) {
    if (bits < 1 || bits > 64) {
        throw WidthOutOfRange("mnadd bit width must be in [1, 64], got " +
                              std::to_string(bits));
    }
    RuleBundle b;
    b.task = Task::MNAdd;
    b.m = bits;
    for (std::uint32_t i = 0; i < bits; ++i) {
        b.inputs.push_back("a_" + std::to_string(i));
        b.inputs.push_back("b_" + std::to_string(i));
    }
    b.manager = std::make_shared<Manager>(make_vtree(b.inputs, vtree));

    Formula carry = Formula::constant(false);
    std::vector<Formula> sums;
    for (std::uint32_t i = 0; i < bits; ++i) {
        auto a = Formula::var("a_" + std::to_string(i));
        auto bbit = Formula::var("b_" + std::to_string(i));
        auto x = Formula::xor_of(a, bbit);
        sums.push_back(Formula::xor_of(x, carry));
        carry = (a & bbit) | (x & carry);
    }
    for (std::uint32_t i = 0; i < bits; ++i) {
        b.outputs.emplace_back("s_" + std::to_string(i),
                               b.manager->compile(desugar(sums[i])));
    }
    b.outputs.emplace_back("c_" + std::to_string(bits),
                           b.manager->compile(desugar(carry)));
    return b;
}

RuleBundle build_mnlogic(std::uint32_t m, const VtreeSpec& vtree) {
    if (m < 2 || m > 64) {
        throw WidthOutOfRange("mnlogic digit count must be in [2, 64], got " +
                              std::to_string(m));
    }
    RuleBundle b;
    b.task = Task::MNLogic;
    b.m = m;
    for (std::uint32_t i = 1; i <= m; ++i) b.inputs.push_back("n_" + std::to_string(i));
    b.manager = std::make_shared<Manager>(make_vtree(b.inputs, vtree));

    Formula chain = Formula::xor_of(Formula::var("n_1"), Formula::var("n_2"));
    for (std::uint32_t i = 3; i <= m; ++i) {
        chain = Formula::xor_of(std::move(chain), Formula::var("n_" + std::to_string(i)));
    }
    b.outputs.emplace_back("y", b.manager->compile(desugar(chain)));
    return b;
}

RuleBundle build_kandlogic(std::uint32_t m, const VtreeSpec& vtree) {
    if (m < 2 || m > 16) {
        throw WidthOutOfRange("kandlogic object count must be in [2, 16], got " +
                              std::to_string(m));
    }
    RuleBundle b;
    b.task = Task::KandLogic;
    b.m = m;
    auto shape_var = [](std::uint32_t i, Shape s) {
        return "S_" + std::to_string(i) + "_" + std::string(shape_name(s));
    };
    auto color_var = [](std::uint32_t i, Color c) {
        return "K_" + std::to_string(i) + "_" + std::string(color_name(c));
    };
    for (std::uint32_t i = 1; i <= m; ++i) {
        for (int s = 0; s < kShapeCount; ++s) {
            b.inputs.push_back(shape_var(i, static_cast<Shape>(s)));
        }
        for (int c = 0; c < kColorCount; ++c) {
            b.inputs.push_back(color_var(i, static_cast<Color>(c)));
        }
    }
    b.manager = std::make_shared<Manager>(make_vtree(b.inputs, vtree));

    // The pairwise rule alone is enormous as a canonical circuit over
    // unrestricted assignments (the cut state must track every shape/color
    // subset pattern), so the exactly-one structure of the encoding is
    // conjoined in. The codec only ever produces one-hot assignments, where
    // both functions agree. Clauses are ordered by the later object so the
    // running conjunction stays prefix-local.
    auto exactly_one = [](const std::vector<std::string>& names) {
        std::vector<Formula> parts;
        std::vector<Formula> any;
        for (const auto& n : names) any.push_back(Formula::var(n));
        parts.push_back(Formula::or_of(std::move(any)));
        for (std::size_t x = 0; x < names.size(); ++x) {
            for (std::size_t y = x + 1; y < names.size(); ++y) {
                parts.push_back(!(Formula::var(names[x]) & Formula::var(names[y])));
            }
        }
        return Formula::and_of(std::move(parts));
    };

    std::vector<Formula> clauses;
    for (std::uint32_t j = 1; j <= m; ++j) {
        std::vector<std::string> shape_names, color_names;
        for (int s = 0; s < kShapeCount; ++s) {
            shape_names.push_back(shape_var(j, static_cast<Shape>(s)));
        }
        for (int k = 0; k < kColorCount; ++k) {
            color_names.push_back(color_var(j, static_cast<Color>(k)));
        }
        clauses.push_back(exactly_one(shape_names));
        clauses.push_back(exactly_one(color_names));
        for (std::uint32_t i = 1; i < j; ++i) {
            std::vector<Formula> same_shape, same_color;
            for (int s = 0; s < kShapeCount; ++s) {
                same_shape.push_back(Formula::var(shape_var(i, static_cast<Shape>(s))) &
                                     Formula::var(shape_var(j, static_cast<Shape>(s))));
            }
            for (int k = 0; k < kColorCount; ++k) {
                same_color.push_back(Formula::var(color_var(i, static_cast<Color>(k))) &
                                     Formula::var(color_var(j, static_cast<Color>(k))));
            }
            clauses.push_back((!Formula::or_of(std::move(same_shape))) |
                              Formula::or_of(std::move(same_color)));
        }
    }
    b.outputs.emplace_back("y", b.manager->compile(desugar(Formula::and_of(clauses))));
    return b;
}

std::uint32_t bits_for_decimal_digits(std::uint32_t k) {
    if (k < 1) throw WidthOutOfRange("digit count must be >= 1");
    BigCount largest = 1;
    for (std::uint32_t i = 0; i < k; ++i) largest *= 10;
    largest -= 1;  // largest k-digit value
    std::uint32_t m = 1;
    while ((BigCount(1) << m) <= largest) ++m;
    return m;
}

RuleBundle build_for_dataset(Task task, std::uint32_t width, const VtreeSpec& vtree) {
    switch (task) {
        case Task::MNAdd: {
            auto b = build_mnadd(bits_for_decimal_digits(width), vtree);
            b.mnadd_digits = width;
            return b;
        }
        case Task::MNLogic: return build_mnlogic(width, vtree);
        case Task::KandLogic: return build_kandlogic(width, vtree);
    }
    throw WidthOutOfRange("unknown task");
}

// ------------------------------------------------------------------ codecs

Assignment encode_concepts(const RuleBundle& b, const Concepts& c) {
    if (task_of(c) != b.task) {
        throw LengthMismatch("concepts are for task " +
                             std::string(task_name(task_of(c))) + ", bundle is " +
                             std::string(task_name(b.task)));
    }
    Assignment w(b.manager->vars_ptr());
    switch (b.task) {
        case Task::MNAdd: {
            const auto& mc = std::get<MnAddConcepts>(c);
            auto in_range = [&](std::uint64_t v) {
                return b.m >= 64 || v < (std::uint64_t{1} << b.m);
            };
            if (!in_range(mc.a) || !in_range(mc.b)) {
                throw ConceptOutOfRange("number does not fit in " +
                                        std::to_string(b.m) + " bits");
            }
            for (std::uint32_t i = 0; i < b.m; ++i) {
                w.set("a_" + std::to_string(i), (mc.a >> i) & 1);
                w.set("b_" + std::to_string(i), (mc.b >> i) & 1);
            }
            break;
        }
        case Task::MNLogic: {
            const auto& mc = std::get<MnLogicConcepts>(c);
            if (mc.bits.size() != b.m) {
                throw LengthMismatch("expected " + std::to_string(b.m) + " bits, got " +
                                     std::to_string(mc.bits.size()));
            }
            for (std::uint32_t i = 0; i < b.m; ++i) {
                if (mc.bits[i] > 1) throw ConceptOutOfRange("bit out of {0,1}");
                w.set("n_" + std::to_string(i + 1), mc.bits[i] != 0);
            }
            break;
        }
        case Task::KandLogic: {
            const auto& kc = std::get<KandConcepts>(c);
            if (kc.objects.size() != b.m) {
                throw LengthMismatch("expected " + std::to_string(b.m) +
                                     " objects, got " + std::to_string(kc.objects.size()));
            }
            for (std::uint32_t i = 0; i < b.m; ++i) {
                const auto& obj = kc.objects[i];
                w.set("S_" + std::to_string(i + 1) + "_" +
                          std::string(shape_name(obj.shape)),
                      true);
                w.set("K_" + std::to_string(i + 1) + "_" +
                          std::string(color_name(obj.color)),
                      true);
            }
            break;
        }
    }
    return w;
}

namespace {

Answer decode_bits(const RuleBundle& b, const std::vector<bool>& bits) {
    // bits are positional over b.outputs
    switch (b.task) {
        case Task::MNAdd: {
            unsigned __int128 sum = 0;
            for (std::uint32_t i = 0; i <= b.m; ++i) {
                if (bits[i]) sum |= static_cast<unsigned __int128>(1) << i;
            }
            // only reachable at m=64 with the carry-out set
            if (sum > std::numeric_limits<std::uint64_t>::max()) {
                throw ConceptOutOfRange("sum does not fit the 64-bit answer range");
            }
            return {Task::MNAdd, static_cast<std::uint64_t>(sum)};
        }
        case Task::MNLogic: return {Task::MNLogic, bits[0] ? 1u : 0u};
        case Task::KandLogic: return {Task::KandLogic, bits[0] ? 1u : 0u};
    }
    throw MissingOutputBit("?");
}

}  // namespace

Answer decode_answer(const RuleBundle& b,
                     const std::unordered_map<std::string, bool>& outputs) {
    std::vector<bool> bits;
    bits.reserve(b.outputs.size());
    for (const auto& [name, ref] : b.outputs) {
        auto it = outputs.find(name);
        if (it == outputs.end()) throw MissingOutputBit(name);
        bits.push_back(it->second);
    }
    return decode_bits(b, bits);
}

Answer answer(const RuleBundle& b, const Concepts& c) {
    auto w = encode_concepts(b, c);
    std::vector<SddRef> roots;
    roots.reserve(b.outputs.size());
    for (const auto& [name, ref] : b.outputs) roots.push_back(ref);
    return decode_bits(b, b.manager->evaluate_many(roots, w));
}

// ------------------------------------------------------------- persistence

void save_bundle(const RuleBundle& b, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);

    {
        std::ofstream vt(fs::path(dir) / "vtree.txt", std::ios::binary);
        if (!vt) throw IoError("cannot write vtree file in " + dir);
        vt << b.manager->vtree().dump();
    }
    nlohmann::ordered_json manifest;
    manifest["kind"] = "bundle";
    manifest["version"] = 1;
    manifest["task"] = std::string(task_name(b.task));
    manifest["m"] = b.m;
    manifest["decimal_digits"] = b.mnadd_digits;
    manifest["inputs"] = b.inputs;
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(b.manager->vtree().structural_hash()));
    manifest["vtree_file"] = "vtree.txt";
    manifest["vtree_hash"] = hash_hex;
    auto outs = nlohmann::ordered_json::array();
    for (const auto& [name, ref] : b.outputs) {
        auto file = name + ".sdd";
        b.manager->save_circuit((fs::path(dir) / file).string(), ref);
        outs.push_back({{"name", name}, {"file", file}});
    }
    manifest["outputs"] = std::move(outs);
    std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!mf) throw IoError("cannot write manifest in " + dir);
    mf << manifest.dump(2) << "\n";
}

RuleBundle load_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!mf) throw IoError("cannot read manifest in " + dir);
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
    try {
        if (manifest.at("kind") != "bundle" || manifest.at("version") != 1) {
            throw FormatError("manifest: not a version-1 bundle");
        }
        auto task = task_from_name(manifest.at("task").get<std::string>());
        if (!task) throw FormatError("manifest: unknown task");

        RuleBundle b;
        b.task = *task;
        b.m = manifest.at("m").get<std::uint32_t>();
        b.mnadd_digits = manifest.at("decimal_digits").get<std::uint32_t>();
        b.inputs = manifest.at("inputs").get<std::vector<std::string>>();

        std::ifstream vt(fs::path(dir) / manifest.at("vtree_file").get<std::string>(),
                         std::ios::binary);
        if (!vt) throw IoError("cannot read vtree file in " + dir);
        std::ostringstream vbuf;
        vbuf << vt.rdbuf();
        b.manager = std::make_shared<Manager>(VTree::parse_dump(vbuf.str()));

        for (const auto& out : manifest.at("outputs")) {
            auto name = out.at("name").get<std::string>();
            auto file = out.at("file").get<std::string>();
            b.outputs.emplace_back(name,
                                   b.manager->load_circuit((fs::path(dir) / file).string()));
        }
        // the layout must be what the builders would declare
        std::size_t expected_outputs = b.task == Task::MNAdd ? b.m + 1 : 1;
        if (b.outputs.size() != expected_outputs || b.inputs.empty()) {
            throw FormatError("manifest: output layout does not match task");
        }
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
}

}  // namespace vlc
