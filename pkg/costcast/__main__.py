import sys

from costcast.main import main

sys.exit(main())
