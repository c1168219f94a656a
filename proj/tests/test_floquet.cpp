#include <doctest.h>

TEST_SUITE("floquet") {}
