#include <doctest.h>

TEST_SUITE("trap_model") {}
