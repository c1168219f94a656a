#include <doctest.h>

TEST_SUITE("integrator") {}
