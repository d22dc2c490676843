#!/usr/bin/env python3
"""Regenerates tests/fixtures/parity from an independent PyTorch definition.

The network is rebuilt here from its textual description (torch layers only),
given random weights and random batch-norm statistics, and evaluated in
inference mode. The C++ engine must reproduce `expected.oarr` from
`arch.txt`, `weights.oarr` and `input.oarr`.

    python3 tests/fixtures/make_parity_fixture.py [--out DIR] [--seed N]
"""

import argparse
import math
import struct
from pathlib import Path

import torch
import torch.nn as nn
import torch.nn.functional as F

INPUT_SIZE = 32
WIDTH = 0.5
BN_EPS = 1e-3
ENCODER = [("Conv", 32, 1), ("MBConv1", 16, 1), ("MBConv6", 24, 2), ("MBConv6", 40, 2),
           ("MBConv6", 80, 2), ("MBConv6", 112, 1), ("MBConv6", 192, 2)]
SKIPS = [1, 2, 3, 5]
DECODER = [112, 40, 24, 16]


def scale(c, w):
    return max(8, int(math.floor(c * w / 8.0 + 0.5)) * 8)


class ConvUnit(nn.Module):
    def __init__(self, cin, cout, k, stride=1, groups=1, bn=True, act="silu"):
        super().__init__()
        self.conv = nn.Conv2d(cin, cout, k, stride, k // 2, groups=groups, bias=True)
        self.bn = nn.BatchNorm2d(cout, eps=BN_EPS) if bn else None
        self.act = act

    def forward(self, x):
        x = self.conv(x)
        if self.bn is not None:
            x = self.bn(x)
        if self.act == "silu":
            return F.silu(x)
        if self.act == "relu":
            return F.relu(x)
        return x


class SE(nn.Module):
    def __init__(self, c, r):
        super().__init__()
        self.reduce = nn.Conv2d(c, r, 1)
        self.expand = nn.Conv2d(r, c, 1)

    def forward(self, x):
        s = x.mean(dim=(2, 3), keepdim=True)
        return x * torch.sigmoid(self.expand(F.silu(self.reduce(s))))


class MBConv(nn.Module):
    def __init__(self, cin, cout, stride, expansion):
        super().__init__()
        mid = cin * expansion
        self.expand = ConvUnit(cin, mid, 1) if expansion != 1 else None
        self.dw = ConvUnit(mid, mid, 3, stride, groups=mid)
        self.se = SE(mid, max(mid // 4, 1))
        self.project = ConvUnit(mid, cout, 1, act=None)
        self.residual = stride == 1 and cin == cout

    def forward(self, x):
        h = self.expand(x) if self.expand is not None else x
        h = self.project(self.se(self.dw(h)))
        return h + x if self.residual else h


class DoubleConv(nn.Module):
    def __init__(self, cin, cout):
        super().__init__()
        self.conv1 = ConvUnit(cin, cout, 3, act="relu")
        self.conv2 = ConvUnit(cout, cout, 3, act="relu")

    def forward(self, x):
        return self.conv2(self.conv1(x))


class Net(nn.Module):
    def __init__(self):
        super().__init__()
        blocks, cin, taps = [], 1, []
        for i, (kind, cout, stride) in enumerate(ENCODER):
            cout = scale(cout, WIDTH)
            if kind == "Conv":
                blocks.append(ConvUnit(cin, cout, 3, stride))
            else:
                blocks.append(MBConv(cin, cout, stride, 6 if kind == "MBConv6" else 1))
            if i in SKIPS:
                taps.append(cout)
            cin = cout
        self.encoder = nn.ModuleList(blocks)
        dec = []
        for j, c in enumerate(DECODER):
            c = scale(c, WIDTH)
            dec.append(DoubleConv(cin + taps[-1 - j], c))
            cin = c
        self.decoder = nn.ModuleList(dec)
        self.final = ConvUnit(cin, 1, 3, bn=False, act="relu")

    def forward(self, x):
        skips = []
        for i, b in enumerate(self.encoder):
            x = b(x)
            if i in SKIPS:
                skips.append(x)
        for j, d in enumerate(self.decoder):
            up = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
            x = d(torch.cat([up, skips[-1 - j]], dim=1))
        return self.final(x)


def manifest(net):
    """(name, tensor) pairs in the engine's canonical order."""
    out = []

    def unit(prefix, u):
        out.append((prefix + ".conv.weight", u.conv.weight))
        out.append((prefix + ".conv.bias", u.conv.bias))
        if u.bn is not None:
            out.append((prefix + ".bn.weight", u.bn.weight))
            out.append((prefix + ".bn.bias", u.bn.bias))
            out.append((prefix + ".bn.running_mean", u.bn.running_mean))
            out.append((prefix + ".bn.running_var", u.bn.running_var))

    for i, b in enumerate(net.encoder):
        p = f"encoder.{i}"
        if isinstance(b, ConvUnit):
            unit(p, b)
            continue
        if b.expand is not None:
            unit(p + ".expand", b.expand)
        unit(p + ".dw", b.dw)
        out.append((p + ".se.reduce.weight", b.se.reduce.weight))
        out.append((p + ".se.reduce.bias", b.se.reduce.bias))
        out.append((p + ".se.expand.weight", b.se.expand.weight))
        out.append((p + ".se.expand.bias", b.se.expand.bias))
        unit(p + ".project", b.project)
    for j, d in enumerate(net.decoder):
        unit(f"decoder.{j}.conv1", d.conv1)
        unit(f"decoder.{j}.conv2", d.conv2)
    unit("final", net.final)
    return out


def record(name, t=None, raw=None):
    nb = name.encode()
    head = struct.pack("<H", len(nb)) + nb
    if raw is not None:
        return head + struct.pack("<BBI", 2, 1, len(raw)) + raw
    a = t.detach().to(torch.float32).contiguous()
    dims = list(a.shape)
    head += struct.pack("<BB", 0, len(dims)) + b"".join(struct.pack("<I", d) for d in dims)
    return head + a.numpy().astype("<f4").tobytes()


def write(path, records):
    path.write_bytes(b"OARR\x01" + b"".join(records))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent / "parity"))
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(args.seed)
    net = Net()
    with torch.no_grad():
        for m in net.modules():
            if isinstance(m, nn.Conv2d):
                fan_in = m.weight[0].numel()
                bound = math.sqrt(6.0 / fan_in)
                m.weight.uniform_(-bound, bound)
                m.bias.uniform_(-0.1, 0.1)
            if isinstance(m, nn.BatchNorm2d):
                m.weight.uniform_(0.5, 1.5)
                m.bias.uniform_(-0.1, 0.1)
                m.running_mean.uniform_(-0.1, 0.1)
                m.running_var.uniform_(0.5, 1.5)
    net.eval()

    x = torch.rand(1, 1, INPUT_SIZE, INPUT_SIZE)
    with torch.no_grad():
        y = net(x)

    entries = manifest(net)
    names = {n for n, _ in entries}
    expected = {k for k in net.state_dict() if not k.endswith("num_batches_tracked")}
    assert len(names) == len(entries) == len(expected), "manifest does not cover the module"

    listing = "".join(n + "\n" for n, _ in entries).encode()
    write(out / "weights.oarr", [record("__manifest__", raw=listing)] + [record(n, t) for n, t in entries])
    write(out / "input.oarr", [record("input", x[0])])
    write(out / "expected.oarr", [record("expected", y[0])])

    lines = ["name = parity", "input_channels = 1", f"input_size = {INPUT_SIZE}", f"width_multiplier = {WIDTH}",
             f"bn_eps = {BN_EPS}", "input_normalization = none"]
    lines += [f"encoder.{i} = {k} {c} {s}" for i, (k, c, s) in enumerate(ENCODER)]
    lines += ["skip_taps = " + " ".join(map(str, SKIPS)), "decoder = " + " ".join(map(str, DECODER))]
    (out / "arch.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {len(entries)} tensors, output range [{y.min().item():.4g}, {y.max().item():.4g}] to {out}")


if __name__ == "__main__":
    main()
