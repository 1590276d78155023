#include <stdio.h>
int main(void) {
    const char *rpn = "34+2*7-";
    int st[16], sp = 0;
    for (const char *p = rpn; *p; p++) {
        if (*p >= '0' && *p <= '9') { st[sp++] = *p - '0'; continue; }
        int b = st[--sp], a = st[--sp];
        st[sp++] = *p == '+' ? a + b : *p == '-' ? a - b : a * b;
    }
    printf("%d\n", st[0]);
    return 0;
}
