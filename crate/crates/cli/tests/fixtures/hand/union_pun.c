#include <stdio.h>
union u { unsigned char b[4]; unsigned int w; };
int main(void) { union u x; x.w = 0; x.b[0] = 1; printf("%d\n", x.w == 1 || x.w == 0x01000000u); return 0; }
