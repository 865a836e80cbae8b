#include <cmath>
#include <set>

#include "abaf/config.hpp"
#include "abaf/error.hpp"
#include "abaf/rng.hpp"
#include "abaf/text_io.hpp"
#include "doctest.h"

using namespace abaf;

TEST_SUITE("core") {
TEST_CASE("rng streams are deterministic and distinct") {
    Rng a(7), b(7);
    for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng s1 = Rng(7).stream("fold0"), s2 = Rng(7).stream("fold1");
    CHECK(s1.next_u64() != s2.next_u64());
    CHECK(Rng::named(7, "x").next_u64() == Rng(7).stream("x").next_u64());
}

TEST_CASE("rng distributions") {
    Rng r(1);
    double sum = 0, sq = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        CHECK_UNARY(u >= 0.0);
        CHECK_UNARY(u < 1.0);
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sq / n - 1.0) < 0.03);
    std::set<std::size_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(r.below(5));
    CHECK(seen.size() == 5);
    CHECK(*seen.rbegin() == 4);
}

TEST_CASE("config parse, serialize and typed getters") {
    auto cfg = KeyValueConfig::parse("# comment\ntrain.lr = 0.001\n train.patience=10\nmodel.flag = true\n");
    CHECK(cfg.get_double("train.lr") == doctest::Approx(0.001));
    CHECK(cfg.get_int("train.patience") == 10);
    CHECK(cfg.get_bool("model.flag"));
    auto again = KeyValueConfig::parse(cfg.serialize());
    CHECK(again.serialize() == cfg.serialize());
    CHECK_THROWS_AS(cfg.at("nope"), Error);
    CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign\n"), Error);
}

TEST_CASE("text helpers") {
    CHECK(trim("  a b ") == "a b");
    CHECK(split("a,b,,c", ',').size() == 4);
    CHECK(parse_double("1.5", "x") == 1.5);
    CHECK_THROWS_AS(parse_int("1.5", "x"), Error);
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    const auto cells = parse_csv_row("a,\"b,c\",\"d\"\"e\"");
    REQUIRE(cells.size() == 3);
    CHECK(cells[1] == "b,c");
    CHECK(cells[2] == "d\"e");
    CHECK(trim(csv_row({"x", "y,z"})) == "x,\"y,z\"");
}
}
