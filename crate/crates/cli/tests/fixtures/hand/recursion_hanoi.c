#include <stdio.h>
static long moves;
static void hanoi(int n, int a, int b, int c) { if (!n) return; hanoi(n - 1, a, c, b); moves++; hanoi(n - 1, c, b, a); }
int main(void) { hanoi(12, 1, 2, 3); printf("%ld\n", moves); return 0; }
