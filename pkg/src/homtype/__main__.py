"""python -m homtype"""

from .cli import main

main()
