#include <benchmark/benchmark.h>

// The packaged benchmark_main archive carries LTO bytecode tied to another
// compiler build, so the entry point lives here.
BENCHMARK_MAIN();
