from ._backend import KERNELS
