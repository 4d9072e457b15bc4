import sys

from estimnet.main import main

sys.exit(main())
