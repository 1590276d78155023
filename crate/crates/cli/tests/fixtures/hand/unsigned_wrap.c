#include <stdio.h>
#include <limits.h>
int main(void) {
    unsigned u = UINT_MAX;
    u += 2;
    unsigned char c = 250;
    c += 10;
    printf("%u %u\n", u, (unsigned)c);
    return 0;
}
