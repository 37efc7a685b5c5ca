#include "ndd/harness/harness.hpp"

int main(int argc, char** argv) { return ndd::harness::run(argc, argv); }
