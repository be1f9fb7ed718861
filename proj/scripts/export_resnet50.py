#!/usr/bin/env python3
"""Export an ImageNet-pretrained ResNet-50 feature extractor to ONNX.

The exported graph consumes a 1x3x224x224 float blob of mean-subtracted BGR
pixels (means 103.939, 116.779, 123.68, no further scaling) and emits the
2048-dim globally pooled features. A fixed 1x1 convolution baked into the
graph converts that input convention to the RGB [0,1] normalization the
torchvision weights were trained with, so callers never need to know about
the difference.

The file lands in the weight cache the pipeline reads from: $HANDWASH_CACHE
when set, otherwise ~/.cache/handwash.

Requires torch and torchvision. The first run downloads the pretrained
weights through torchvision's usual cache (~/.cache/torch).
"""

import argparse
import os
import sys
from pathlib import Path

import torch
import torchvision
from torch.nn.utils.fusion import fuse_conv_bn_eval

BGR_MEANS = [103.939, 116.779, 123.68]
RGB_MEANS = [0.485, 0.456, 0.406]
RGB_STDS = [0.229, 0.224, 0.225]


def cache_root() -> Path:
    env = os.environ.get("HANDWASH_CACHE")
    if env:
        return Path(env)
    home = os.environ.get("HOME")
    if home:
        return Path(home) / ".cache" / "handwash"
    return Path(".") / ".handwash-cache"


def input_adapter() -> torch.nn.Conv2d:
    """1x1 convolution mapping mean-subtracted BGR to normalized RGB.

    The mapping is affine per channel, so a fixed convolution expresses it
    with no custom ops in the exported graph.
    """
    adapter = torch.nn.Conv2d(3, 3, kernel_size=1, bias=True)
    with torch.no_grad():
        adapter.weight.zero_()
        for c in range(3):
            k = 2 - c  # RGB channel c comes from BGR channel k
            adapter.weight[c, k, 0, 0] = 1.0 / (255.0 * RGB_STDS[c])
            adapter.bias[c] = (BGR_MEANS[k] / 255.0 - RGB_MEANS[c]) / RGB_STDS[c]
    return adapter


def fold_batchnorms(module: torch.nn.Module) -> None:
    """Fuse every Conv2d + BatchNorm2d pair in place.

    OpenCV's ONNX importer (4.5.x) rejects the Identity nodes the exporter
    emits for batch-norm buffers, so the batch norms must disappear before
    export. Folding them into the preceding convolution is exact in eval
    mode up to float rounding.
    """
    for child in module.children():
        fold_batchnorms(child)
    if isinstance(module, torch.nn.Sequential):
        names = list(module._modules)
        for a, b in zip(names, names[1:]):
            if isinstance(module._modules[a], torch.nn.Conv2d) and isinstance(
                module._modules[b], torch.nn.BatchNorm2d
            ):
                module._modules[a] = fuse_conv_bn_eval(module._modules[a], module._modules[b])
                module._modules[b] = torch.nn.Identity()
    elif isinstance(module, torchvision.models.resnet.Bottleneck):
        for conv_name, bn_name in (("conv1", "bn1"), ("conv2", "bn2"), ("conv3", "bn3")):
            fused = fuse_conv_bn_eval(getattr(module, conv_name), getattr(module, bn_name))
            setattr(module, conv_name, fused)
            setattr(module, bn_name, torch.nn.Identity())


class FeatureExtractor(torch.nn.Module):
    def __init__(self, resnet: torch.nn.Module):
        super().__init__()
        self.adapter = input_adapter()
        resnet.conv1 = fuse_conv_bn_eval(resnet.conv1, resnet.bn1)
        resnet.bn1 = torch.nn.Identity()
        fold_batchnorms(resnet)
        self.body = torch.nn.Sequential(
            resnet.conv1,
            resnet.relu,
            resnet.maxpool,
            resnet.layer1,
            resnet.layer2,
            resnet.layer3,
            resnet.layer4,
            resnet.avgpool,
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.flatten(self.body(self.adapter(x)), 1)


def export_onnx(model: torch.nn.Module, dummy: torch.Tensor, path: Path, opset: int) -> None:
    kwargs = dict(
        input_names=["frame"],
        output_names=["features"],
        opset_version=opset,
        dynamo=False,
        do_constant_folding=True,
    )
    try:
        torch.onnx.export(model, (dummy,), str(path), **kwargs)
        return
    except Exception as err:  # noqa: BLE001
        if "onnx is not installed" not in str(err):
            raise
    # The exporter only needs the onnx package for a post-processing step
    # that appends custom-op function bodies. This graph contains none, so
    # the step is an identity transform and can be bypassed when the package
    # is unavailable.
    try:
        from torch.onnx._internal.torchscript_exporter import onnx_proto_utils

        onnx_proto_utils._add_onnxscript_fn = lambda model_bytes, custom_opsets: model_bytes
    except ImportError:
        raise SystemExit(
            "torch.onnx.export needs the onnx package on this torch version; "
            "install it with: pip install onnx"
        )
    torch.onnx.export(model, (dummy,), str(path), **kwargs)


def verify(path: Path, model: torch.nn.Module, dummy: torch.Tensor, tolerance: float) -> None:
    try:
        import cv2
        import numpy as np
    except ImportError:
        print("cv2 not available, skipping verification")
        return
    net = cv2.dnn.readNetFromONNX(str(path))
    # blobFromImage expects HWC, the probe tensor is NCHW.
    hwc = dummy[0].permute(1, 2, 0).numpy().astype(np.float32)
    net.setInput(cv2.dnn.blobFromImage(hwc))
    got = net.forward().reshape(-1)
    with torch.no_grad():
        want = model(dummy).numpy().reshape(-1)
    worst = float(np.abs(got - want).max())
    print(f"verification: cv2.dnn vs torch max abs diff {worst:.3e}")
    if worst > tolerance:
        raise SystemExit(f"verification failed, diff {worst:.3e} exceeds {tolerance:.1e}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--output",
        type=Path,
        default=cache_root() / "resnet50_features.onnx",
        help="destination file (default: the weight cache)",
    )
    parser.add_argument("--opset", type=int, default=12, help="ONNX opset version")
    parser.add_argument(
        "--tolerance",
        type=float,
        default=1e-3,
        help="max abs feature difference allowed during verification",
    )
    parser.add_argument("--no-verify", action="store_true", help="skip the cv2.dnn round-trip")
    args = parser.parse_args()

    weights = torchvision.models.ResNet50_Weights.IMAGENET1K_V1
    print("loading pretrained ResNet-50 weights")
    resnet = torchvision.models.resnet50(weights=weights).eval()
    model = FeatureExtractor(resnet).eval()

    args.output.parent.mkdir(parents=True, exist_ok=True)
    dummy = torch.randn(1, 3, 224, 224)
    export_onnx(model, dummy, args.output, args.opset)
    size_mb = args.output.stat().st_size / 2**20
    print(f"wrote {args.output} ({size_mb:.1f} MiB)")

    if not args.no_verify:
        verify(args.output, model, dummy, args.tolerance)


if __name__ == "__main__":
    sys.exit(main())
