#include <doctest.h>
TEST_CASE("placeholder runner") { CHECK(true); }
