#include <doctest.h>

#include "sd/demos.hpp"

TEST_CASE("one-time pad demo passes") {
    sd::DemoReport r = sd::demo_otp(SD_DATA_DIR);
    INFO(r.text);
    CHECK(r.pass);
}

TEST_CASE("newcomb demo passes") {
    sd::DemoReport r = sd::demo_newcomb(SD_DATA_DIR);
    INFO(r.text);
    CHECK(r.pass);
}

TEST_CASE("xor demo passes") {
    sd::DemoReport r = sd::demo_xor(SD_DATA_DIR);
    INFO(r.text);
    CHECK(r.pass);
}

TEST_CASE("race demo passes") {
    sd::DemoReport r = sd::demo_race(SD_DATA_DIR);
    INFO(r.text);
    CHECK(r.pass);
}

TEST_CASE("mascarpone demo passes") {
    sd::DemoReport r = sd::demo_mascarpone(SD_DATA_DIR);
    INFO(r.text);
    CHECK(r.pass);
}

TEST_CASE("demo reports are deterministic") {
    sd::DemoReport a = sd::demo_race(SD_DATA_DIR);
    sd::DemoReport b = sd::demo_race(SD_DATA_DIR);
    CHECK(a.text == b.text);
    CHECK(a.details == b.details);
}
