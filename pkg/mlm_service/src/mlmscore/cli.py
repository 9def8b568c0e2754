"""Command-line entry points: serve, finetune, init-demo."""

from __future__ import annotations

import logging

import click

from .model import ServiceConfig, build_demo_model


@click.group()
def main():
    """Masked-LM sentence scoring service and finetuning."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--model", required=True, help="Model directory or hub id.")
@click.option("--port", default=8100, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--device", default="cpu", show_default=True)
@click.option("--max-batch", default=64, show_default=True, type=int,
              help="Masked copies per forward pass.")
@click.option("--approximate", is_flag=True,
              help="Single-pass approximation instead of exact per-position masking.")
def serve(model, port, host, device, max_batch, approximate):
    """Serve POST /v1/score; the port binds immediately and requests get 503
    until the model finishes loading in the background."""
    import uvicorn

    from .api import ModelHolder, create_app

    try:
        config = ServiceConfig(
            model=model, device=device, max_batch=max_batch,
            exact=not approximate, port=port, host=host,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    holder = ModelHolder(config)
    holder.load_in_background()
    uvicorn.run(create_app(holder), host=config.host, port=config.port, log_level="info")


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False),
              help="One sentence per line (first tab-separated field is used).")
@click.option("--model", "base_model", required=True, help="Base model directory or hub id.")
@click.option("--epochs", default=2, show_default=True, type=int)
@click.option("--lr", default=1e-5, show_default=True, type=float)
@click.option("--mask-rate", default=0.15, show_default=True, type=float)
@click.option("--seed", default=13, show_default=True, type=int)
@click.option("--batch-size", default=16, show_default=True, type=int)
@click.option("--device", default="cpu", show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Directory for the finetuned model (loadable by serve).")
def finetune(corpus, base_model, epochs, lr, mask_rate, seed, batch_size, device, out):
    """Finetune a masked LM on a sentence corpus and save the result."""
    from .finetune import finetune as run_finetune

    try:
        losses = run_finetune(
            base_model, corpus, out,
            epochs=epochs, lr=lr, mask_rate=mask_rate,
            seed=seed, batch_size=batch_size, device=device,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    for epoch, loss in enumerate(losses, start=1):
        click.echo(f"epoch {epoch}/{len(losses)}: loss={loss:.6f}")
    click.echo(f"saved to {out}")


@main.command("init-demo")
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Directory for the demo model.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--epochs", default=200, show_default=True, type=int)
def init_demo(out, seed, epochs):
    """Build and train the tiny self-contained demo model (no downloads)."""
    try:
        build_demo_model(out, seed=seed, epochs=epochs)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    click.echo(f"demo model saved to {out}")


if __name__ == "__main__":
    main()
