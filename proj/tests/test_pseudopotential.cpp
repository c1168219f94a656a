#include <doctest.h>

TEST_SUITE("pseudopotential") {}
