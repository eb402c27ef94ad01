#include "lawnav/cli.hpp"

int main(int argc, char** argv) { return lawnav::dispatch(argc, argv); }
