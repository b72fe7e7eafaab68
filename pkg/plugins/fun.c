/* Minimal example: one int out, one int in, answer is always 42. */
void fun(int * out, int * in) {
    *out = 42;
}
