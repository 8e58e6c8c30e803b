#include <doctest.h>
TEST_CASE("placeholder recover") { CHECK(true); }
