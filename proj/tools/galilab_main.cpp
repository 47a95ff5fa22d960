#include <cstdio>
int main() { std::puts("galilab: under construction"); return 0; }
