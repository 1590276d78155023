#include <stdio.h>
int main(void) {
    int a[] = {10, 20, 30, 40, 50};
    int *p = a + 1, *q = &a[4];
    printf("%d %d %td\n", *p, *(q - 1), q - p);
    return 0;
}
