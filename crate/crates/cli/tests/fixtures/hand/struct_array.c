#include <stdio.h>
struct item { const char *name; int qty; double price; };
int main(void) {
    struct item items[] = {{"bolt", 10, 0.25}, {"nut", 25, 0.125}, {"gear", 2, 3.5}};
    double total = 0;
    for (int i = 0; i < 3; i++) total += items[i].qty * items[i].price;
    printf("total %.3f\n", total);
    return 0;
}
