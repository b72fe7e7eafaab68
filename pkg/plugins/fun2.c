/* Two outputs and two inputs of mixed type and length. */
#include <math.h>

void fun2(int * out0, float * out1, int * in0, float * in1) {
    *out0 = 42*in0[0];
    out1[0] = in1[0]*in1[1];
    out1[1] = powf(in1[0], in1[1]);
}
