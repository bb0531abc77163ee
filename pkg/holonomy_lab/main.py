import typer

from . import __version__
from .commands import compare, holonomy, propagate, spectrum

# Initialize CLI app
app = typer.Typer(
    name="holonomy-lab",
    help="Quantum holonomy M(C) = W(C) B(C) of kicked spin and static models.",
    no_args_is_help=True,
    add_completion=False,
)

# Register commands
app.command("holonomy")(holonomy.holonomy)
app.command("spectrum")(spectrum.spectrum)
app.command("compare")(compare.compare)
app.command("propagate")(propagate.propagate)


@app.command("version")
def version():
    """Print the package version."""
    typer.echo(__version__)


def main():
    app()
