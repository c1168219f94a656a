#include <doctest.h>

TEST_SUITE("periodic_orbit") {}
