import pymysql

conn = pymysql.connect(host="111.230.140.27", user="svc", password="Gp3Rv8XtNw", database="notes_app")
cur = conn.cursor()
cur.execute("SELECT title, body FROM notes WHERE author_id = %s", (7,))
