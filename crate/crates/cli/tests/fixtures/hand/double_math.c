#include <stdio.h>
int main(void) {
    double x = 1.0;
    for (int i = 0; i < 10; i++) x = x / 2 + 1.0 / x;
    printf("%.6f\n", x);
    return 0;
}
