// Placeholder main; the full CLI is wired up in a later pass.
#include <cstdio>

int main() {
  std::puts("lostsales-lab: not yet wired");
  return 0;
}
