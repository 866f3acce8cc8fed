import json
from pathlib import Path

import click

from src.dataset import DEFAULT_SEED, load_mnist, shuffled_indices
from src.netpbm import write_image
from src.recognition import compose_digit_sheet


@click.command()
@click.option("--mnist-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("data/mnist"), show_default=True)
@click.option("--out", "out_image", type=click.Path(dir_okay=False, path_type=Path), default=Path("data/digit_sheet.ppm"), show_default=True)
@click.option("--count", type=click.IntRange(1, 20), default=5, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=DEFAULT_SEED, show_default=True)
def main(mnist_dir, out_image, count, seed):
    """Paste held-out MNIST test digits onto a white page and save the ground truth next to it."""
    test = load_mnist(mnist_dir, "test")
    picks = shuffled_indices(len(test), seed)[:count]
    chosen = test.subset(picks)

    page, cells = compose_digit_sheet(chosen.images())
    write_image(out_image, page)

    truth = [{"x": c.x, "y": c.y, "w": c.w, "h": c.h, "digit": int(d), "mnist_index": int(i)}
             for c, d, i in zip(cells, chosen.labels, picks)]
    out_json = out_image.with_suffix(".json")
    out_json.write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")

    click.echo(f"✅ Digit sheet with {count} digits saved to {out_image} (ground truth: {out_json})")


if __name__ == "__main__":
    main()
