#include <cstdio>

int main() {
  std::puts("attnlab: subcommands pending");
  return 0;
}
