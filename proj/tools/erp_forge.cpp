#include <cstdio>

int main() {
  std::puts("erp-forge: placeholder");
  return 0;
}
