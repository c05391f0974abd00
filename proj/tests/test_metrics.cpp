#include <catch2/catch_amalgamated.hpp>
#include "scsim/scsim.hpp"
