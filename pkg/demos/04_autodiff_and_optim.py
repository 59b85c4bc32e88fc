"""The reverse-mode engine and optimizer that train the encoder.

A computation is a graph of Tensors; backward() fills .grad for every
parameter. The op set is small and attention-shaped. Gradients are exact:
the finite-difference check below is the same oracle the test suite runs
against every operation and the full model.
"""
import numpy as np

from graphit import autodiff as ad
from graphit.optim import Adam, halving_lr, warmup_lr

np.set_printoptions(precision=4, suppress=True)
rng = np.random.default_rng(0)

print("== build, run backward, inspect grads =============================")
w = ad.parameter(rng.standard_normal((3, 2)) * 0.5, "w")
x = ad.constant(rng.standard_normal((4, 3)))
y = ad.relu(ad.matmul(x, w))
loss = ad.mean_all(ad.mul(y, y))
ad.backward(loss)
print("loss:", float(loss.value))
print("dloss/dw:")
print(w.grad)

print("\n== finite-difference spot check ===================================")
h = 1e-5
idx = (1, 0)
orig = w.value[idx]
w.value[idx] = orig + h
up = float(ad.mean_all(ad.mul(*(lambda t: (t, t))(ad.relu(ad.matmul(x, w))))).value)
w.value[idx] = orig - h
dn = float(ad.mean_all(ad.mul(*(lambda t: (t, t))(ad.relu(ad.matmul(x, w))))).value)
w.value[idx] = orig
print(f"numeric {((up - dn) / (2 * h)):.8f}  vs analytic {w.grad[idx]:.8f}")

print("\n== Adam fits a tiny least-absolute-error problem ==================")
true_w = np.array([[2.0], [-1.0]])
data_x = rng.standard_normal((64, 2))
data_y = (data_x @ true_w).reshape(-1)
w = ad.parameter(np.zeros((2, 1)), "w")
opt = Adam({"w": w}, lr=0.05)
for step in range(200):
    opt.zero_grad()
    pred = ad.matmul(ad.constant(data_x), w)
    loss = ad.l1_loss(pred, data_y)
    ad.backward(loss)
    opt.step()
    if step % 50 == 0:
        print(f"step {step:3d}  mae {float(loss.value):.4f}  w {w.value.reshape(-1)}")
print("recovered:", w.value.reshape(-1), " target:", true_w.reshape(-1))

print("\n== the two schedules ==============================================")
print("halving (classification): lr at epochs 0/49/50/100/299 with base 1e-3:")
print([halving_lr(1e-3, e) for e in (0, 49, 50, 100, 299)])
print("warmup (regression): ramps to base at the warmup step, then decays:")
print([round(warmup_lr(1e-3, s, 2000), 6) for s in (1, 500, 1000, 2000, 8000)])
