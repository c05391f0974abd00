#include "scsim/scsim.hpp"
int main() { return 0; }
