#include <doctest.h>

#include <stdexcept>

#include "rcsim/rational.hpp"

using rcsim::Rat;

TEST_CASE("rationals normalize and compare exactly") {
    CHECK(Rat(2, 4) == Rat(1, 2));
    CHECK(Rat(-2, -4) == Rat(1, 2));
    CHECK(Rat(1, -2) == Rat(-1, 2));
    CHECK(Rat(0, 7) == Rat(0));
    CHECK(Rat(1, 3) < Rat(1, 2));
    CHECK(Rat(-1, 2) < Rat(1, 3));
    CHECK(Rat(3, 4) > Rat(9, 16));
}

TEST_CASE("arithmetic stays exact") {
    Rat half(1, 2), third(1, 3);
    CHECK(half + third == Rat(5, 6));
    CHECK(half - third == Rat(1, 6));
    CHECK(half * third == Rat(1, 6));
    CHECK(half / third == Rat(3, 2));
    Rat acc(0);
    for (int k = 0; k < 8; k++) acc += Rat(1, 8);
    CHECK(acc == Rat(1));
}

TEST_CASE("string round-trip uses p/q form") {
    CHECK(Rat(1, 2).str() == "1/2");
    CHECK(Rat(25, 64).str() == "25/64");
    CHECK(Rat(2).str() == "2/1");
    CHECK(Rat::parse("9/16") == Rat(9, 16));
    CHECK(Rat::parse("3") == Rat(3));
    CHECK(Rat::parse("-5/10") == Rat(-1, 2));
}

TEST_CASE("zero denominators and overflow are rejected") {
    CHECK_THROWS_AS(Rat(1, 0), std::domain_error);
    CHECK_THROWS_AS(Rat(1) / Rat(0), std::domain_error);
    Rat big(INT64_MAX / 2, 1);
    CHECK_THROWS_AS(big * big, std::overflow_error);
}
