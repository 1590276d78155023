#include <stdio.h>
static int sq(int x) { return x * x; }
static int neg(int x) { return -x; }
int main(void) {
    int (*fs[])(int) = {sq, neg, sq};
    int v = 3;
    for (int i = 0; i < 3; i++) v = fs[i](v);
    printf("%d\n", v);
    return 0;
}
