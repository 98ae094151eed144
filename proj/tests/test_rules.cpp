#include "doctest.h"

#include <filesystem>
#include <random>

#include "support.hpp"
#include "vlc/rules.hpp"

using namespace vlc;

namespace {

MnAddConcepts num_pair(std::uint64_t a, std::uint64_t b) { return {a, b}; }

KandConcepts kand(std::initializer_list<std::pair<Shape, Color>> objs) {
    KandConcepts k;
    for (auto [s, c] : objs) k.objects.push_back({s, c});
    return k;
}

// direct pairwise check, no circuits involved
bool kand_oracle(const KandConcepts& k) {
    for (std::size_t i = 0; i < k.objects.size(); ++i) {
        for (std::size_t j = i + 1; j < k.objects.size(); ++j) {
            if (k.objects[i].shape == k.objects[j].shape &&
                k.objects[i].color != k.objects[j].color) {
                return false;
            }
        }
    }
    return true;
}

int fold_xor(const std::vector<std::uint8_t>& bits) {
    int acc = 0;
    for (auto b : bits) acc ^= b;
    return acc;
}

}  // namespace

TEST_SUITE_BEGIN("rules");

TEST_CASE("half adder") {
    auto b = build_mnadd(1);
    REQUIRE(b.inputs == std::vector<std::string>{"a_0", "b_0"});
    REQUIRE(b.outputs.size() == 2);
    CHECK(b.outputs[0].first == "s_0");
    CHECK(b.outputs[1].first == "c_1");
    // s_0 is the xor, c_1 the conjunction
    CHECK(b.outputs[0].second ==
          b.manager->compile(parse_formula("(a_0 & !b_0) | (!a_0 & b_0)")));
    CHECK(b.outputs[1].second == b.manager->compile(parse_formula("a_0 & b_0")));
}

TEST_CASE("one plus one is two") {
    auto b = build_mnadd(2);
    CHECK(answer(b, Concepts{num_pair(1, 1)}) == Answer{Task::MNAdd, 2});
}

TEST_CASE("adder soundness, exhaustive small widths") {
    for (std::uint32_t m = 1; m <= 4; ++m) {
        auto b = build_mnadd(m);
        for (std::uint64_t x = 0; x < (1u << m); ++x) {
            for (std::uint64_t y = 0; y < (1u << m); ++y) {
                REQUIRE(answer(b, Concepts{num_pair(x, y)}).value == x + y);
            }
        }
    }
}

TEST_CASE("worked ten-bit pair") {
    auto b = build_for_dataset(Task::MNAdd, 3);
    CHECK(b.m == 10);
    CHECK(b.dataset_width() == 3);

    auto w = encode_concepts(b, Concepts{num_pair(640, 280)});
    // 640 = 1010000000 in binary, little-endian in a_i
    std::string a_bits, b_bits;
    for (int i = 9; i >= 0; --i) {
        a_bits += w.value_of("a_" + std::to_string(i)) ? '1' : '0';
        b_bits += w.value_of("b_" + std::to_string(i)) ? '1' : '0';
    }
    CHECK(a_bits == "1010000000");
    CHECK(b_bits == "0100011000");

    std::vector<SddRef> roots;
    for (const auto& [name, ref] : b.outputs) roots.push_back(ref);
    auto bits = b.manager->evaluate_many(roots, w);
    std::string s_bits;
    for (int i = 9; i >= 0; --i) s_bits += bits[i] ? '1' : '0';
    CHECK(s_bits == "1110011000");
    CHECK(bits[10] == false);  // c_10

    CHECK(answer(b, Concepts{num_pair(640, 280)}) == Answer{Task::MNAdd, 920});
}

TEST_CASE("decode examples") {
    auto b = build_mnadd(10);
    std::unordered_map<std::string, bool> outs;
    // 1110011000 read into s_9..s_0, carry clear
    std::string s_bits = "1110011000";
    for (int i = 0; i < 10; ++i) {
        outs["s_" + std::to_string(i)] = s_bits[9 - i] == '1';
    }
    outs["c_10"] = false;
    CHECK(decode_answer(b, outs) == Answer{Task::MNAdd, 920});

    for (auto& [k, v] : outs) v = false;
    CHECK(decode_answer(b, outs).value == 0);

    outs.erase("s_3");
    CHECK_THROWS_AS(decode_answer(b, outs), MissingOutputBit);

    auto logic = build_mnlogic(3);
    CHECK(decode_answer(logic, {{"y", true}}) == Answer{Task::MNLogic, 1});
}

TEST_CASE("parity bundle") {
    auto b2 = build_mnlogic(2);
    CHECK(answer(b2, Concepts{MnLogicConcepts{{1, 0}}}).value == 1);
    auto b3 = build_mnlogic(3);
    CHECK(answer(b3, Concepts{MnLogicConcepts{{1, 1, 1}}}).value == 1);
    CHECK(answer(b3, Concepts{MnLogicConcepts{{1, 0, 1}}}).value == 0);

    auto b7 = build_mnlogic(7);
    for (std::uint32_t mask = 0; mask < 128; ++mask) {
        MnLogicConcepts c;
        for (int i = 0; i < 7; ++i) c.bits.push_back((mask >> i) & 1);
        REQUIRE(answer(b7, Concepts{c}).value ==
                static_cast<std::uint64_t>(fold_xor(c.bits)));
    }
}

TEST_CASE("relational bundle") {
    auto b = build_kandlogic(2);
    CHECK(answer(b, Concepts{kand({{Shape::Circle, Color::Red},
                                   {Shape::Circle, Color::Red}})})
              .value == 1);
    CHECK(answer(b, Concepts{kand({{Shape::Circle, Color::Red},
                                   {Shape::Circle, Color::Blue}})})
              .value == 0);

    auto b3 = build_kandlogic(3);
    CHECK(answer(b3, Concepts{kand({{Shape::Circle, Color::Red},
                                    {Shape::Circle, Color::Blue},
                                    {Shape::Square, Color::Red}})})
              .value == 0);
    // exhaustive over all 9^3 concept tuples
    for (int code = 0; code < 729; ++code) {
        KandConcepts k;
        int rest = code;
        for (int i = 0; i < 3; ++i) {
            k.objects.push_back({static_cast<Shape>(rest % 9 / 3),
                                 static_cast<Color>(rest % 3)});
            rest /= 9;
        }
        REQUIRE(answer(b3, Concepts{k}).value ==
                static_cast<std::uint64_t>(kand_oracle(k) ? 1 : 0));
    }
}

TEST_CASE("bits for decimal digits") {
    CHECK(bits_for_decimal_digits(1) == 4);
    CHECK(bits_for_decimal_digits(3) == 10);
    CHECK(bits_for_decimal_digits(7) == 24);
    CHECK(bits_for_decimal_digits(5) == 17);
    CHECK_THROWS_AS(bits_for_decimal_digits(0), WidthOutOfRange);
}

TEST_CASE("encode edge cases") {
    auto b = build_mnadd(10);
    auto w = encode_concepts(b, Concepts{num_pair(0, 0)});
    for (const auto& name : b.inputs) CHECK(w.value_of(name) == false);
    CHECK_THROWS_AS(encode_concepts(b, Concepts{num_pair(1024, 0)}), ConceptOutOfRange);
    CHECK_THROWS_AS(encode_concepts(b, Concepts{MnLogicConcepts{{1, 0}}}),
                    LengthMismatch);

    auto kb = build_kandlogic(2);
    auto kw = encode_concepts(
        kb, Concepts{kand({{Shape::Square, Color::Yellow}, {Shape::Triangle, Color::Red}})});
    int set = 0;
    for (const auto& name : kb.inputs) set += kw.value_of(name) ? 1 : 0;
    CHECK(set == 4);  // one-hot: one shape and one color per object
    CHECK_THROWS_AS(encode_concepts(kb, Concepts{kand({{Shape::Circle, Color::Red}})}),
                    LengthMismatch);

    auto lb = build_mnlogic(3);
    CHECK_THROWS_AS(encode_concepts(lb, Concepts{MnLogicConcepts{{1, 0, 7}}}),
                    ConceptOutOfRange);
}

TEST_CASE("codec round-trip through a pass-through bundle") {
    // identity bundle: s_i wired to a_i, carry pinned false
    std::uint32_t m = 10;
    auto b = build_mnadd(m);
    RuleBundle ident = b;
    ident.outputs.clear();
    for (std::uint32_t i = 0; i < m; ++i) {
        ident.outputs.emplace_back("s_" + std::to_string(i),
                                   b.manager->literal("a_" + std::to_string(i), true));
    }
    ident.outputs.emplace_back("c_10", b.manager->false_ref());

    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::uint64_t> pick(0, 1023);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = pick(rng);
        CHECK(answer(ident, Concepts{num_pair(a, pick(rng))}).value == a);
    }
}

TEST_CASE("intermediate symbols never become inputs") {
    for (const auto& b :
         {build_mnadd(6), build_mnlogic(6), build_kandlogic(4)}) {
        for (const auto& name : b.inputs) {
            CHECK(name.rfind("x_", 0) != 0);
            CHECK(name.rfind("z_", 0) != 0);
        }
        // and the manager knows exactly the declared inputs
        CHECK(b.manager->vars().size() == b.inputs.size());
    }
}

TEST_CASE("full-width adder") {
    auto b = build_mnadd(64);
    CHECK(answer(b, Concepts{num_pair(5, 7)}).value == 12);
    auto big = std::uint64_t{0xffffffffffffffffULL};
    CHECK(answer(b, Concepts{num_pair(big, 0)}).value == big);
    // a 65-bit sum has no answer representation
    CHECK_THROWS_AS(answer(b, Concepts{num_pair(big, 1)}), ConceptOutOfRange);
}

TEST_CASE("width limits") {
    CHECK_THROWS_AS(build_mnadd(0), WidthOutOfRange);
    CHECK_THROWS_AS(build_mnadd(65), WidthOutOfRange);
    CHECK_THROWS_AS(build_mnlogic(1), WidthOutOfRange);
    CHECK_THROWS_AS(build_mnlogic(65), WidthOutOfRange);
    CHECK_THROWS_AS(build_kandlogic(1), WidthOutOfRange);
    CHECK_THROWS_AS(build_kandlogic(17), WidthOutOfRange);
}

TEST_CASE("bundle save and load") {
    auto dir = std::filesystem::temp_directory_path() / "vlc_bundle_test";
    std::filesystem::remove_all(dir);

    auto b = build_for_dataset(Task::MNAdd, 2);
    save_bundle(b, dir.string());
    auto loaded = load_bundle(dir.string());
    CHECK(loaded.task == Task::MNAdd);
    CHECK(loaded.m == b.m);
    CHECK(loaded.dataset_width() == 2);
    CHECK(loaded.inputs == b.inputs);

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::uint64_t> pick(0, 99);
    for (int trial = 0; trial < 100; ++trial) {
        auto c = Concepts{num_pair(pick(rng), pick(rng))};
        CHECK(answer(loaded, c) == answer(b, c));
    }

    auto kb = build_kandlogic(3, {VtreeSpec::Kind::Random, 1});
    save_bundle(kb, dir.string());
    auto kloaded = load_bundle(dir.string());
    CHECK(kloaded.manager->vtree().dump() == kb.manager->vtree().dump());
    for (int code = 0; code < 729; code += 7) {
        KandConcepts k;
        int rest = code;
        for (int i = 0; i < 3; ++i) {
            k.objects.push_back({static_cast<Shape>(rest % 9 / 3),
                                 static_cast<Color>(rest % 3)});
            rest /= 9;
        }
        CHECK(answer(kloaded, Concepts{k}) == answer(kb, Concepts{k}));
    }

    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(load_bundle(dir.string()), IoError);
}

TEST_SUITE_END();
